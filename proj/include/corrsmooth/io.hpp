#pragma once

#include "corrsmooth/locfit.hpp"
#include "corrsmooth/table.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace corrsmooth {

//! Reads a header-first CSV with columns x1..xD and y (any order, extra
//! columns ignored). Fields are plain numbers; quoting is not supported.
//! Throws IoError for unreadable files, missing columns and bad numbers.
Dataset read_dataset_csv(const std::filesystem::path& path, Metric metric = Metric::Euclidean);

//! Shortest text that parses back to the same double; NaN prints as NA.
std::string format_double(double v);

//! Ordered CSV output; every row must match the header width.
class CsvWriter
{
public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  void row(const std::vector<std::string>& fields);
  void row(const std::vector<double>& values);

private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t width_;
};

//! One scenario per non-empty, non-comment line of key=value tokens:
//!   family=SP c=2 alpha=1 D=2 n=500 sigma2=0.1 seed=7 trials=30
//!   methods=ZA(1,1.5);GCV;minEpan;Raw
//! Errors name the offending line.
std::vector<TableScenario> parse_scenarios(std::istream& in, const std::string& source);
std::vector<TableScenario> read_scenarios(const std::filesystem::path& path);
std::string scenario_line(const TableScenario& scenario);

enum class TableMetric
{
  MsePrac,
  MseSigma2,
  SseCor,
};

//! model,c,method,mean,sd rows for every scenario and method that reports
//! the metric.
void write_table_csv(const std::filesystem::path& path, const std::vector<ScenarioResult>& results,
                     TableMetric metric);
void write_trials_csv(const std::filesystem::path& path,
                      const std::vector<ScenarioResult>& results);

void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace corrsmooth
