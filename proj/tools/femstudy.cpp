#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "cornerfem/study.hpp"

namespace {

int usage() {
  std::fprintf(stderr,
               "usage: femstudy run <config-file> [--levels N]\n"
               "       femstudy predict <config-file>\n"
               "       femstudy reproduce <table-id> [--levels N]\n"
               "\n"
               "table ids: lshape1, lshape2, slit1, slit2, quadratic, fichera\n"
               "CORNERFEM_NUM_THREADS sets the error-integration thread count\n");
  return 2;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace cornerfem;
  if (argc < 3) return usage();
  const std::string cmd = argv[1];
  const std::string arg = argv[2];
  int levels_override = -1;
  for (int i = 3; i < argc; ++i) {
    const std::string flag = argv[i];
    if (flag == "--levels" && i + 1 < argc) {
      levels_override = std::atoi(argv[++i]);
    } else {
      return usage();
    }
  }

  try {
    const int nthreads = env_thread_count();
    if (cmd == "run" || cmd == "predict") {
      StudyConfig cfg = parse_config(read_file(arg));
      if (levels_override >= 0) cfg.levels = levels_override;
      if (cmd == "predict") {
        write_output(cfg.output, emit_predictions(cfg));
      } else {
        write_output(cfg.output, emit_table(run_study(cfg, nthreads), cfg.format));
      }
    } else if (cmd == "reproduce") {
      std::string out;
      for (const ReproduceStudy& st : reproduce_studies(arg)) {
        StudyConfig cfg = st.cfg;
        if (levels_override >= 0) cfg.levels = levels_override;
        out += "# study " + st.label + "\n";
        out += emit_table(run_study(cfg, nthreads), cfg.format);
        out += "\n";
      }
      std::fputs(out.c_str(), stdout);
    } else {
      return usage();
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "femstudy: %s\n", e.what());
    return 1;
  }
  return 0;
}
