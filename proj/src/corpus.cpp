#include <filesystem>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "ncx/eval.hpp"

namespace ncx {

namespace fs = std::filesystem;

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += "\n  " + x;
  return s;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

CorpusLoadError::CorpusLoadError(std::vector<std::string> failures)
    : Error("corpus failed to load:" + join_lines(failures)), failures_(std::move(failures)) {}

Corpus load_corpus(const std::string& manifest_path) {
  toml::table tbl;
  try {
    tbl = toml::parse_file(manifest_path);
  } catch (const toml::parse_error& e) {
    throw CorpusLoadError({manifest_path + ": " + std::string(e.description())});
  } catch (const std::exception& e) {
    throw CorpusLoadError({manifest_path + ": " + e.what()});
  }

  const fs::path base = fs::path(manifest_path).parent_path();
  Corpus c;
  c.name = tbl["name"].value_or(fs::path(manifest_path).stem().string());
  std::vector<std::string> failures;

  const auto* arr = tbl["problem"].as_array();
  if (!arr || arr->empty()) throw CorpusLoadError({manifest_path + ": no [[problem]] entries"});

  std::size_t i = 0;
  for (const auto& node : *arr) {
    ++i;
    const auto* t = node.as_table();
    std::string where = manifest_path + " problem " + std::to_string(i);
    if (!t) {
      failures.push_back(where + ": not a table");
      continue;
    }
    auto file = (*t)["file"].value<std::string>();
    if (!file) {
      failures.push_back(where + ": missing 'file'");
      continue;
    }
    CorpusEntry e;
    e.path = (base / *file).string();
    e.name = (*t)["name"].value_or(fs::path(*file).stem().string());
    if (auto d = (*t)["repair_depth"].value<int64_t>()) e.repair_depth = static_cast<int>(*d);
    if (auto d = (*t)["correction_depth"].value<int64_t>()) e.correction_depth = static_cast<int>(*d);
    try {
      e.problem = load_problem_file(e.path);
      if (auto d = (*t)["description"].value<std::string>()) e.description.emplace(read_text(base / *d));
    } catch (const std::exception& ex) {
      failures.push_back(e.path + ": " + ex.what());
      continue;
    }
    c.problems.push_back(std::move(e));
  }
  if (!failures.empty()) throw CorpusLoadError(std::move(failures));
  return c;
}

}  // namespace ncx
