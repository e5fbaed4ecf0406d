// Writes a synthetic world (t0, t1, factor layers) for demos and smoke runs.
#include <iostream>

#include "CLI11.hpp"
#include "plus/errors.hpp"
#include "synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"write a synthetic PLUS world"};
  plus::synth::WorldOptions o;
  std::string out;
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--size", o.size, "grid edge length in cells [default: 200]");
  app.add_option("--seed", o.seed, "generator seed [default: 1]");
  app.add_option("--threshold", o.dist_threshold, "planted road-distance threshold [default: 10]");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto w = plus::synth::make_world(o);
    plus::synth::save_world(w, out);
  } catch (const plus::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
