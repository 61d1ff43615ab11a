#include "corrsmooth/io.hpp"

#include "corrsmooth/errors.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace corrsmooth {

namespace {

std::string trim(const std::string& s)
{
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep)
{
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) {
    out.push_back(trim(field));
  }
  if (!line.empty() && line.back() == sep) {
    out.emplace_back();
  }
  return out;
}

bool parse_number(const std::string& text, double& value)
{
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

std::string where(const std::string& source, std::size_t line)
{
  return source + ":" + std::to_string(line) + ": ";
}

} // namespace

Dataset read_dataset_csv(const std::filesystem::path& path, Metric metric)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError(path.string() + " is empty");
  }
  auto header = split(line, ',');
  std::map<std::string, std::size_t> column;
  for (std::size_t k = 0; k < header.size(); ++k) {
    column[header[k]] = k;
  }
  if (!column.contains("y")) {
    throw IoError("column y not found in " + path.string());
  }
  std::vector<std::size_t> xcols;
  while (column.contains("x" + std::to_string(xcols.size() + 1))) {
    xcols.push_back(column["x" + std::to_string(xcols.size() + 1)]);
  }
  if (xcols.empty()) {
    throw IoError("column x1 not found in " + path.string());
  }
  const std::size_t ycol = column["y"];

  std::vector<double> xs, ys;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) {
      continue;
    }
    auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw IoError(where(path.string(), lineno) + "expected " + std::to_string(header.size()) +
                    " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c : xcols) {
      double v;
      if (!parse_number(fields[c], v)) {
        throw IoError(where(path.string(), lineno) + "bad number '" + fields[c] + "'");
      }
      xs.push_back(v);
    }
    double v;
    if (!parse_number(fields[ycol], v)) {
      throw IoError(where(path.string(), lineno) + "bad number '" + fields[ycol] + "'");
    }
    ys.push_back(v);
  }
  const auto n = static_cast<Eigen::Index>(ys.size());
  const auto d = static_cast<Eigen::Index>(xcols.size());
  PointMatrix points = Eigen::Map<PointMatrix>(xs.data(), n, d);
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  return Dataset(std::move(points), std::move(y), metric);
}

std::string format_double(double v)
{
  if (std::isnan(v)) {
    return "NA";
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
  : out_(path), path_(path), width_(header.size())
{
  if (!out_) {
    throw IoError("cannot write " + path.string());
  }
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields)
{
  if (fields.size() != width_) {
    throw InvalidArgument("CSV row width does not match the header of " + path_.string());
  }
  for (std::size_t k = 0; k < fields.size(); ++k) {
    out_ << (k ? "," : "") << fields[k];
  }
  out_ << '\n';
  if (!out_) {
    throw IoError("write failed for " + path_.string());
  }
}

void CsvWriter::row(const std::vector<double>& values)
{
  std::vector<std::string> fields;
  fields.reserve(values.size());
  for (double v : values) {
    fields.push_back(format_double(v));
  }
  row(fields);
}

// ---------------------------------------------------------------------------

std::vector<TableScenario> parse_scenarios(std::istream& in, const std::string& source)
{
  std::vector<TableScenario> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) {
      continue;
    }
    std::map<std::string, std::string> kv;
    std::istringstream tokens(body);
    std::string token;
    while (tokens >> token) {
      auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw InvalidArgument(where(source, lineno) + "expected key=value, got '" + token + "'");
      }
      kv[token.substr(0, eq)] = token.substr(eq + 1);
    }

    TableScenario scn;
    auto number = [&](const std::string& key, double fallback) {
      auto it = kv.find(key);
      if (it == kv.end()) {
        return fallback;
      }
      double v;
      if (!parse_number(it->second, v)) {
        throw InvalidArgument(where(source, lineno) + "bad value for " + key + ": '" +
                              it->second + "'");
      }
      kv.erase(it);
      return v;
    };
    try {
      if (!kv.contains("family")) {
        throw InvalidArgument("missing family");
      }
      scn.sim.model.family = parse_family(kv["family"]);
      kv.erase("family");
      if (!kv.contains("c")) {
        throw InvalidArgument("missing c");
      }
      scn.sim.model.c = number("c", 0.0);
      scn.sim.model.alpha = number("alpha", 1.0);
      scn.sim.model.dim = static_cast<int>(number("D", 2));
      scn.sim.model.sigma2 = number("sigma2", 0.1);
      scn.sim.mu = scn.sim.model.dim == 3 ? MeanFunction::Mu3D : MeanFunction::Mu2D;
      if (kv.contains("mu")) {
        scn.sim.mu = parse_mean_function(kv["mu"]);
        kv.erase("mu");
      }
      scn.sim.n = static_cast<std::size_t>(number("n", scn.sim.model.dim == 3 ? 600 : 500));
      scn.sim.seed = static_cast<std::uint64_t>(number("seed", 1));
      scn.sim.n_trials = static_cast<int>(number("trials", 30));
      std::string methods = "ZA(1,1.5);ZA(2,2.5);ZA(3,3.5);GCV;minEpan;Raw";
      if (kv.contains("methods")) {
        methods = kv["methods"];
        kv.erase("methods");
      }
      for (const auto& m : split(methods, ';')) {
        scn.methods.push_back(parse_method(m));
      }
      if (!kv.empty()) {
        throw InvalidArgument("unknown key '" + kv.begin()->first + "'");
      }
      scn.sim.validate();
    } catch (const InvalidArgument& e) {
      std::string msg = e.what();
      if (msg.starts_with(source + ":")) {
        throw;
      }
      throw InvalidArgument(where(source, lineno) + msg);
    }
    out.push_back(std::move(scn));
  }
  return out;
}

std::vector<TableScenario> read_scenarios(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return parse_scenarios(in, path.string());
}

std::string scenario_line(const TableScenario& scenario)
{
  const auto& m = scenario.sim.model;
  std::ostringstream os;
  os << "family=" << to_string(m.family) << " c=" << format_double(m.c)
     << " alpha=" << format_double(m.alpha) << " D=" << m.dim
     << " sigma2=" << format_double(m.sigma2) << " mu=" << to_string(scenario.sim.mu)
     << " n=" << scenario.sim.n << " seed=" << scenario.sim.seed
     << " trials=" << scenario.sim.n_trials << " methods=";
  for (std::size_t k = 0; k < scenario.methods.size(); ++k) {
    os << (k ? ";" : "") << scenario.methods[k].label();
  }
  return os.str();
}

void write_table_csv(const std::filesystem::path& path, const std::vector<ScenarioResult>& results,
                     TableMetric metric)
{
  CsvWriter csv(path, {"model", "c", "method", "mean", "sd", "trials", "failures"});
  for (const auto& r : results) {
    const auto& model = r.scenario.sim.model;
    for (const auto& s : r.summary) {
      const MetricSummary& v = metric == TableMetric::MsePrac   ? s.mse_prac
                               : metric == TableMetric::MseSigma2 ? s.mse_sigma2
                                                                  : s.sse_cor;
      if (v.count == 0 && s.failures == 0) {
        continue;
      }
      csv.row({to_string(model.family), format_double(model.c), s.method, format_double(v.mean),
               format_double(v.sd), std::to_string(v.count), std::to_string(s.failures)});
    }
  }
}

void write_trials_csv(const std::filesystem::path& path,
                      const std::vector<ScenarioResult>& results)
{
  CsvWriter csv(path, {"model", "c", "trial", "method", "ok", "h", "h_z", "b", "fallback",
                       "mse_prac", "sigma2_hat", "sse_cor", "error"});
  for (const auto& r : results) {
    const auto& model = r.scenario.sim.model;
    for (const auto& t : r.trials) {
      std::string error = t.error;
      for (char& ch : error) {
        if (ch == ',' || ch == '\n') {
          ch = ';';
        }
      }
      csv.row({to_string(model.family), format_double(model.c), std::to_string(t.trial),
               t.method, t.ok ? "1" : "0", format_double(t.h), format_double(t.h_z),
               format_double(t.b), t.fallback ? "1" : "0", format_double(t.mse_prac),
               format_double(t.sigma2_hat), format_double(t.sse_cor), error});
    }
  }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path);
  if (!out || !(out << text)) {
    throw IoError("cannot write " + path.string());
  }
}

} // namespace corrsmooth
