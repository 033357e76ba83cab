#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace apxpart::test {

inline std::string read_fixture(const std::string& name) {
  const std::string path = std::string(APXPART_FIXTURE_DIR) + "/" + name;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace apxpart::test
