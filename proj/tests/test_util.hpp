#pragma once

// Shared test fixtures: a scratch directory per test and a small
// multilingual dataset exercising CJK, Cyrillic and Latin scripts.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace vareg::testutil {

class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int tries = 0; tries < 100; ++tries) {
      auto candidate = base / ("vareg-test-" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

// Ten labeled instances across scripts and domains.
inline std::string multilingual_fixture() {
  return R"({"id":"r1","text":"I am so disappointed in the service it ruined our evening","aspect":"service","valence":3.38,"arousal":5.75}
{"id":"r2","text":"I got this laptop and am very impressed with it","aspect":"laptop","valence":8.0,"arousal":8.0}
{"id":"r3","text":"客室のトイレが古すぎて臭かったです","aspect":"トイレ","valence":2.62,"arousal":6.5}
{"id":"r4","text":"施設のスタッフはとても丁寧でした","aspect":"スタッフ","valence":8.0,"arousal":7.83}
{"id":"r5","text":"Сервис вполне хороший.","aspect":"Сервис","valence":6.5,"arousal":5.0}
{"id":"r6","text":"真的可以算是賣像最差的pizza","aspect":"賣像","valence":3.33,"arousal":6.67}
{"id":"r7","text":"Grundversorgung gehört nicht in staatliche Hand.","aspect":"Grundversorgung","valence":1.9,"arousal":7.4}
{"id":"r8","text":"A new Nigeria is coming guys.","aspect":"Nigeria","valence":7.23,"arousal":4.57}
{"id":"r9","text":"asante kwa taarifa tumezichukua","aspect":"taarifa","valence":7.03,"arousal":5.7}
{"id":"r10","text":"人類活動造成嚴重環境污染","aspect":"人類活動","valence":3.3,"arousal":6.3}
)";
}

}  // namespace vareg::testutil
