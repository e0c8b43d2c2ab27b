#include "rpz/error.hpp"
#include "rpz/inference.hpp"

namespace rpz {

std::unique_ptr<InferState> make_engine(const EngineConfig& cfg, const Value& init, long particles) {
  const std::string& m = cfg.method;
  if (m == "is") return make_particle_engine(cfg, init, particles, false);
  if (m == "pf") return make_particle_engine(cfg, init, particles, true);
  if (m == "ds") return make_ds_engine(cfg, init, particles, false, false);
  if (m == "bds") return make_ds_engine(cfg, init, particles, true, true);
  if (m == "sds") return make_ds_engine(cfg, init, particles, true, false);
  throw Error(ErrorKind::Config, "unknown inference method " + m);
}

}  // namespace rpz
