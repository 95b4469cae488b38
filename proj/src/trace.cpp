#include "trace.hpp"

#include <json.hpp>

namespace subqba {

std::string trace_to_jsonl(const std::vector<TraceEvent>& events) {
  std::string out;
  out.reserve(events.size() * 64);
  for (const auto& e : events) {
    nlohmann::json j;
    j["round"] = e.round;
    switch (e.kind) {
      case TraceEvent::Kind::Send:
        j["ev"] = "send";
        j["node"] = e.node;
        j["envelope"] = e.envelope;
        j["msg"] = tag_to_string(e.tag);
        j["honest"] = e.flag;
        break;
      case TraceEvent::Kind::Deliver:
        j["ev"] = "deliver";
        j["node"] = e.node;
        j["to"] = e.peer;
        j["envelope"] = e.envelope;
        j["msg"] = tag_to_string(e.tag);
        break;
      case TraceEvent::Kind::Corrupt:
        j["ev"] = "corrupt";
        j["node"] = e.node;
        break;
      case TraceEvent::Kind::Retract:
        j["ev"] = "retract";
        j["node"] = e.node;
        j["envelope"] = e.envelope;
        break;
      case TraceEvent::Kind::Output:
        j["ev"] = "output";
        j["node"] = e.node;
        j["bit"] = int(e.bit);
        break;
      case TraceEvent::Kind::Coin:
        j["ev"] = "coin";
        j["node"] = e.node;
        j["key"] = tag_to_string(e.tag);
        j["success"] = e.flag;
        break;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace subqba
