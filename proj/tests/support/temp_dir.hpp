#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

namespace crackforge::testing {

/// Fresh scratch directory named after the running test.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  std::filesystem::path p = std::filesystem::temp_directory_path() / "crackforge_tests" /
                            (std::string(info ? info->test_suite_name() : "x") + "_" +
                             (info ? info->name() : "x") + "_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace crackforge::testing
