#include "fedssta/compare.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fedssta/textio.hpp"

namespace fedssta {

namespace {

struct RunData {
  std::string name;
  std::vector<double> val_accuracy;  // per round
  double final_val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_precision = 0.0;
  double test_recall = 0.0;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> f;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t next = line.find(',', pos);
    if (next == std::string::npos) next = line.size();
    f.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return f;
}

RunData load_run(const std::filesystem::path& dir) {
  RunData run;
  run.name = dir.filename().string();
  if (run.name.empty()) run.name = dir.parent_path().filename().string();

  std::istringstream rounds(read_text_file(dir / "rounds.csv"));
  std::string line;
  if (!std::getline(rounds, line)) {
    throw std::runtime_error("compare: empty rounds.csv in " + dir.string());
  }
  std::vector<std::string> header = split_csv_line(line);
  auto it = std::find(header.begin(), header.end(), "val_accuracy");
  if (it == header.end()) {
    throw std::runtime_error("compare: rounds.csv in " + dir.string() +
                             " has no val_accuracy column");
  }
  std::size_t col = static_cast<std::size_t>(it - header.begin());
  while (std::getline(rounds, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw std::runtime_error("compare: ragged row in " + (dir / "rounds.csv").string());
    }
    run.val_accuracy.push_back(std::stod(f[col]));
  }

  nlohmann::json j = nlohmann::json::parse(read_text_file(dir / "summary.json"));
  const auto& fin = j.at("final");
  run.final_val_accuracy = fin.at("validation").at("accuracy").get<double>();
  run.test_accuracy = fin.at("test_overall").at("accuracy").get<double>();
  run.test_precision = fin.at("test_overall").at("precision").get<double>();
  run.test_recall = fin.at("test_overall").at("recall").get<double>();
  return run;
}

}  // namespace

std::string compare_runs(const std::vector<std::filesystem::path>& dirs,
                         CompareWarnings* warnings) {
  if (dirs.size() < 2) {
    throw std::invalid_argument("compare: need at least two run directories");
  }
  std::vector<RunData> runs;
  runs.reserve(dirs.size());
  for (const auto& d : dirs) runs.push_back(load_run(d));

  // disambiguate duplicate directory names (e.g. comparing a run to itself)
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::size_t same = 0;
    for (std::size_t k = 0; k < i; ++k) {
      if (runs[k].name == runs[i].name) ++same;
    }
    if (same > 0) runs[i].name += "#" + std::to_string(same + 1);
  }

  std::size_t common = runs[0].val_accuracy.size();
  for (const RunData& r : runs) common = std::min(common, r.val_accuracy.size());
  for (const RunData& r : runs) {
    if (r.val_accuracy.size() != common && warnings) {
      warnings->messages.push_back("run '" + r.name + "' has " +
                                   std::to_string(r.val_accuracy.size()) +
                                   " rounds, truncating the table to the common prefix of " +
                                   std::to_string(common));
    }
  }

  std::vector<std::string> header{"round"};
  for (const RunData& r : runs) header.push_back(r.name + "_val_accuracy");
  for (std::size_t i = 1; i < runs.size(); ++i) {
    header.push_back("delta_" + runs[i].name + "_vs_" + runs[0].name);
  }
  std::string out = join_csv(header) + "\n";
  for (std::size_t r = 0; r < common; ++r) {
    std::vector<std::string> row{std::to_string(r + 1)};
    for (const RunData& run : runs) row.push_back(format_g17(run.val_accuracy[r]));
    for (std::size_t i = 1; i < runs.size(); ++i) {
      row.push_back(format_g17(runs[i].val_accuracy[r] - runs[0].val_accuracy[r]));
    }
    out += join_csv(row) + "\n";
  }

  out += "\n";
  out += "run,rounds,final_val_accuracy,test_accuracy,test_precision,test_recall,"
         "delta_test_accuracy_vs_" + runs[0].name + "\n";
  for (const RunData& r : runs) {
    std::vector<std::string> row{
        r.name,
        std::to_string(r.val_accuracy.size()),
        format_g17(r.final_val_accuracy),
        format_g17(r.test_accuracy),
        format_g17(r.test_precision),
        format_g17(r.test_recall),
        format_g17(r.test_accuracy - runs[0].test_accuracy)};
    out += join_csv(row) + "\n";
  }
  return out;
}

}  // namespace fedssta
