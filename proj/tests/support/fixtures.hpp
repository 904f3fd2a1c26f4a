#pragma once

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "ardprof/types.hpp"

namespace fixture {

namespace fs = std::filesystem;

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("ardprof_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliRun {
  int code = -1;
  std::string out;  // stdout and stderr together
};

inline CliRun run_cli(const std::string& args, const std::string& log_path) {
  const std::string cmd = std::string("\"") + ARDPROF_CLI + "\" " + args + " > \"" + log_path + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(log_path);
  return r;
}

// Two alter groups, two ego groups, three known columns and one latent.
struct Tiny {
  ardprof::PopulationMargins margins;
  ardprof::ProfileMatrix profile;
  ardprof::ArdDataset data;
  ardprof::ModelParams params;
};

inline Tiny tiny() {
  using namespace ardprof;
  Tiny t;
  auto& m = t.margins;
  m.total = 1000000;
  m.alter_group_names = {"young", "old"};
  m.alter_group_sizes = {600000, 400000};
  m.subpop_names = {"k1", "k2", "k3", "hid"};
  m.subpop_sizes = {3000, 2000, 5000, std::nullopt};
  m.cross_counts = {std::vector<std::int64_t>{2400, 600}, std::vector<std::int64_t>{500, 1500},
                    std::vector<std::int64_t>{3000, 2000}, std::nullopt};
  m.validate();
  t.profile = ProfileMatrix::from_margins(m, {false, false, false, true});

  CountMatrix y(5, 4);
  y << 3, 1, 2, 0,  //
      0, 2, 4, 1,   //
      1, 0, 0, 0,   //
      5, 3, 6, 2,   //
      2, 2, 1, 0;
  t.data = ArdDataset({"a", "b", "c", "d", "e"}, {0, 1, 0, 1, 1}, y, m.subpop_names, {"E1", "E2"});

  auto& p = t.params;
  p.log_degrees.resize(5);
  p.log_degrees << 6.1, 6.5, 5.2, 7.0, 6.3;
  Eigen::MatrixXd mix(2, 2);
  mix << 0.7, 0.3, 0.35, 0.65;
  p.mixing = MixingMatrix(mix);
  p.overdispersion.resize(4);
  p.overdispersion << 2.5, 4.0, 1.8, 3.2;
  p.latent_profile.resize(2, 1);
  p.latent_profile << 0.002, 0.005;
  p.hyper.mu_d = 6.0;
  p.hyper.sigma_d = 0.7;
  p.hyper.mu_m = Eigen::Vector2d(0.5, 0.5);
  p.hyper.sigma_m = Eigen::Vector2d(0.2, 0.3);
  p.hyper.mu_h = -6.0;
  p.hyper.sigma_h = 0.9;
  return t;
}

}  // namespace fixture
