#pragma once

#include <filesystem>
#include <string>

#include "yuepipe/fusion.h"
#include "yuepipe/textnorm.h"

namespace testenv {

inline std::filesystem::path tables_dir() { return YUEPIPE_DEFAULT_TABLES_DIR; }
inline std::filesystem::path data_dir() { return YUEPIPE_TEST_DATA_DIR; }

inline const yuepipe::textnorm::NormalizationTables& tables() {
  static const auto t = yuepipe::textnorm::NormalizationTables::load(tables_dir());
  return t;
}

inline const yuepipe::fusion::JyutpingTable& jyutping() {
  static const auto t = yuepipe::fusion::JyutpingTable::load(tables_dir() / "jyutping.tsv");
  return t;
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("yuepipe_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testenv
