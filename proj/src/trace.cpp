#include "steward/trace.hpp"

#include "steward/error.hpp"

namespace steward {

std::unique_ptr<TraceWriter> TraceWriter::open(const std::string& path) {
  auto w = std::unique_ptr<TraceWriter>(new TraceWriter());
  w->file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*w->file_) throw Error(ErrorKind::kIo, "cannot open trace file " + path);
  w->out_ = w->file_.get();
  return w;
}

void TraceWriter::write(const std::string& kind, const nlohmann::json& fields) {
  nlohmann::ordered_json rec;
  rec["run"] = run_;
  rec["seq"] = ++seq_;
  rec["kind"] = kind;
  for (const auto& [k, v] : fields.items()) rec[k] = v;
  *out_ << rec.dump() << '\n';
  out_->flush();
}

std::vector<nlohmann::json> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read trace file " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace steward
