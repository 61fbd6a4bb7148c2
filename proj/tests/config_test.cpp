#include <gtest/gtest.h>

#include <cstdlib>

#include "blendkg/config.hpp"
#include "test_util.hpp"

using namespace blendkg;

namespace {

std::filesystem::path write_config(const std::string& body) {
  auto dir = blendkg::testing::temp_dir("config");
  auto path = dir / "cfg.json";
  write_file_atomic(path, body);
  return path;
}

}  // namespace

TEST(AppConfig, FileValuesAndRelativePaths) {
  auto path = write_config(R"({"skg_url": "http://s/fred", "model_id": "m", "mode": "replay", "cache_dir": "c",
                              "templates_dir": "/abs/t", "parallelism": 3})");
  AppConfig cfg;
  cfg.merge_file(path);
  EXPECT_EQ(cfg.skg_url, "http://s/fred");
  EXPECT_EQ(cfg.model_id, "m");
  EXPECT_EQ(cfg.mode, llm::Mode::Replay);
  EXPECT_EQ(cfg.cache_dir, path.parent_path() / "c");
  EXPECT_EQ(cfg.templates_dir, std::filesystem::path("/abs/t"));
  EXPECT_EQ(cfg.parallelism, 3u);
  EXPECT_EQ(cfg.recordings(), path.parent_path() / "c" / "llm" / "recordings.jsonl");
}

TEST(AppConfig, RejectsUnknownKeysAndBadValues) {
  AppConfig cfg;
  EXPECT_THROW(cfg.merge_file(write_config(R"({"skg": "x"})")), ConfigError);
  EXPECT_THROW(cfg.merge_file(write_config(R"({"parallelism": "four"})")), ConfigError);
  EXPECT_THROW(cfg.merge_file(write_config("[1, 2]")), ConfigError);
  EXPECT_THROW(cfg.merge_file(write_config("{")), ConfigError);
}

TEST(AppConfig, EnvironmentOverridesFile) {
  AppConfig cfg;
  cfg.merge_file(write_config(R"({"skg_url": "http://file/fred", "llm_base_url": "http://file/v1"})"));
  ::setenv("SKG_URL", "http://env/fred", 1);
  ::setenv("LLM_API_KEY", "secret-key", 1);
  ::unsetenv("LLM_BASE_URL");
  cfg.merge_env();
  ::unsetenv("SKG_URL");
  ::unsetenv("LLM_API_KEY");
  EXPECT_EQ(cfg.skg_url, "http://env/fred");
  EXPECT_EQ(cfg.llm_base_url, "http://file/v1");
  EXPECT_EQ(cfg.api_key, "secret-key");
  EXPECT_EQ(cfg.to_json().dump().find("secret-key"), std::string::npos);
}

TEST(AppConfig, ModeSelectsCachePolicy) {
  AppConfig cfg;
  cfg.mode = llm::Mode::Live;
  EXPECT_EQ(cfg.skg_policy(), skg::CachePolicy::Live);
  cfg.mode = llm::Mode::Record;
  EXPECT_EQ(cfg.skg_policy(), skg::CachePolicy::CacheFirst);
  cfg.mode = llm::Mode::Replay;
  EXPECT_EQ(cfg.skg_policy(), skg::CachePolicy::ReplayOnly);
}
