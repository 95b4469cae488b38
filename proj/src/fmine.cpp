#include "fmine.hpp"

namespace subqba {

FMine::FMine(uint64_t seed, ProtocolKind protocol, uint32_t n, uint32_t lambda, bool bit_specific)
    : protocol_(protocol), n_(n), lambda_(lambda), bit_specific_(bit_specific) {
  seed_key_ = key_combine(key_combine(seed, "fmine"), uint64_t{0});
}

MineTag FMine::normalize(const MineTag& tag) const {
  if (bit_specific_) return tag;
  MineTag t = tag;
  t.bit = 3;  // sentinel: eligibility not tied to the bit
  return t;
}

double FMine::probability(const MineTag& tag) const {
  if (tag.type == MsgType::Propose) {
    return protocol_ == ProtocolKind::Sync13 ? 1.0 / (2.0 * n_) : 1.0 / n_;
  }
  return static_cast<double>(lambda_) / static_cast<double>(n_);
}

FMine::MineResult FMine::mine(NodeId node, const MineTag& tag) {
  const MineTag t = normalize(tag);
  const uint64_t k = pack_key(node, t);
  auto it = coins_.find(k);
  if (it != coins_.end()) return {it->second, false};
  RngStream stream(key_combine(key_combine(seed_key_, uint64_t{node}), pack_tag(t)));
  const bool success = stream.bernoulli(probability(t));
  coins_.emplace(k, success);
  return {success, true};
}

bool FMine::verify(const MineTag& tag, NodeId node) const {
  const MineTag t = normalize(tag);
  auto it = coins_.find(pack_key(node, t));
  return it != coins_.end() && it->second;
}

}  // namespace subqba
