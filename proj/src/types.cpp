#include "types.hpp"

namespace subqba {

const char* msg_type_name(MsgType t) {
  switch (t) {
    case MsgType::Status: return "Status";
    case MsgType::Propose: return "Propose";
    case MsgType::Vote: return "Vote";
    case MsgType::Commit: return "Commit";
    case MsgType::Terminate: return "Terminate";
    case MsgType::Input: return "Input";
  }
  return "?";
}

std::string tag_to_string(const MineTag& t) {
  std::string s = msg_type_name(t.type);
  if (t.type != MsgType::Terminate) {
    s += ":";
    s += std::to_string(t.iteration);
  }
  s += ":";
  s += (t.bit == kBitNone) ? "-" : std::to_string(int(t.bit));
  return s;
}

}  // namespace subqba
