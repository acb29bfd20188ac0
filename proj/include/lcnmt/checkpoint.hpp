#ifndef LCNMT_CHECKPOINT_HPP
#define LCNMT_CHECKPOINT_HPP

#include <string>

#include "lcnmt/data.hpp"
#include "lcnmt/model.hpp"

namespace lcnmt {

// On-disk model container: a little-endian binary file holding a JSON
// header (model config, run config, both vocabularies, the canonical
// parameter name/shape list) followed by the raw 64-bit parameter
// payload in header order.
//
// Layout: magic "LCNM" | u32 version | u64 header_length | header JSON |
// payload of f64 values.
struct Checkpoint {
  ModelConfig config;
  std::string run_config_json;  // opaque CLI configuration, may be empty
  Vocabulary src_vocab, tgt_vocab;
  ModelParameters params;
};

constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lcnmt

#endif
