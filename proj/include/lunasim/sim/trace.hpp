#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace lunasim::sim {

using json = nlohmann::json;

// Append-only event log. Records serialize as JSON Lines with sorted keys and
// no whitespace, so identical runs emit identical bytes.
class Trace {
 public:
  void append(json record) { records_.push_back(std::move(record)); }

  const std::vector<json>& records() const { return records_; }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& r : records_) {
      out += r.dump();
      out += '\n';
    }
    return out;
  }

  static std::vector<json> parse_jsonl(const std::string& text) {
    std::vector<json> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) nl = text.size();
      if (nl > pos) out.push_back(json::parse(text.substr(pos, nl - pos)));
      pos = nl + 1;
    }
    return out;
  }

 private:
  std::vector<json> records_;
};

}  // namespace lunasim::sim
