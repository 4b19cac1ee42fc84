#ifndef SYNCDRF_TEST_COMMON_HPP
#define SYNCDRF_TEST_COMMON_HPP

#include "syncdrf/lang.hpp"

#include <fstream>
#include <sstream>
#include <string>

inline std::string corpus_path(const std::string &name) {
  return std::string(SYNCDRF_CORPUS_DIR) + "/" + name;
}

inline std::string read_corpus(const std::string &name) {
  std::ifstream in(corpus_path(name));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline syncdrf::Program corpus_program(const std::string &name) {
  return syncdrf::load_program(read_corpus(name));
}

#endif
