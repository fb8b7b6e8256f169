#include "cobweb/serialization.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

namespace cobweb {

namespace {

using nlohmann::json;

void append_escaped(std::string& out, const std::string& s) {
  out.push_back('"');
  for (char ch : s) {
    const unsigned char c = static_cast<unsigned char>(ch);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(ch);
        }
    }
  }
  out.push_back('"');
}

// The attribute keys in their canonical (sorted) file order.
constexpr std::array<Attr, kAttrCount> kFileAttrOrder = {
    Attr::anchor, Attr::context_after, Attr::context_before};

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string canonical_bytes(const ConceptTree& tree) {
  std::string out;
  out.reserve(1 << 16);
  out += "{\"format\":\"";
  out += kModelFormat;
  out += "\",\"version\":";
  out += std::to_string(kModelVersion);

  const TreeConfig& cfg = tree.config();
  out += ",\"metadata\":{\"alpha\":";
  out += format_double(cfg.alpha);
  out += ",\"cu_variant\":\"";
  out += to_string(cfg.cu_variant);
  out += "\",\"log_base\":\"natural\",\"min_count\":";
  out += std::to_string(cfg.min_count);
  out += ",\"seed\":";
  out += std::to_string(cfg.seed);
  out += ",\"softmax_sign\":\"";
  out += to_string(cfg.softmax_sign);
  out += "\",\"window\":";
  out += std::to_string(cfg.window);
  out += "}";

  out += ",\"vocabulary\":[";
  const auto& tokens = tree.vocabulary().tokens();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(',');
    append_escaped(out, tokens[i]);
  }
  out += "]";

  out += ",\"nodes\":[";
  bool first_node = true;
  for (NodeId id : tree.preorder()) {
    const ConceptNode& n = tree.node(id);
    if (!first_node) out.push_back(',');
    first_node = false;

    out += "{\"attr_presence\":{";
    for (std::size_t i = 0; i < kFileAttrOrder.size(); ++i) {
      if (i) out.push_back(',');
      append_escaped(out, attr_name(kFileAttrOrder[i]));
      out.push_back(':');
      out += std::to_string(n.attr(kFileAttrOrder[i]).presence);
    }
    out += "},\"av_tallies\":{";
    for (std::size_t i = 0; i < kFileAttrOrder.size(); ++i) {
      if (i) out.push_back(',');
      append_escaped(out, attr_name(kFileAttrOrder[i]));
      out += ":[";
      bool first_pair = true;
      for (const auto& [w, t] : n.attr(kFileAttrOrder[i]).tallies) {
        if (!first_pair) out.push_back(',');
        first_pair = false;
        out.push_back('[');
        out += std::to_string(w);
        out.push_back(',');
        out += format_double(t);
        out.push_back(']');
      }
      out += "]";
    }
    out += "},\"children\":[";
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      if (i) out.push_back(',');
      out += std::to_string(n.children[i]);
    }
    out += "],\"id\":";
    out += std::to_string(n.id);
    out += ",\"instance_count\":";
    out += std::to_string(n.count);
    out += ",\"parent\":";
    out += n.parent == kNoNode ? "null" : std::to_string(n.parent);
    out += "}";
  }
  out += "]}";
  return out;
}

std::uint64_t model_hash(const ConceptTree& tree) {
  const std::string bytes = canonical_bytes(tree);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void save(ConceptTree& tree, const std::filesystem::path& path) {
  tree.refresh_derived();
  const std::string bytes = canonical_bytes(tree);

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move model into place at " + path.string());
  }
}

namespace {

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(where + ": missing field '" + key + "'");
  return *it;
}

}  // namespace

ConceptTree load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("model file " + path.string() + " is not valid: " + e.what());
  }

  if (field(doc, "format", "model").get<std::string>() != kModelFormat)
    throw Error("not a " + std::string(kModelFormat) + " file");
  const int version = field(doc, "version", "model").get<int>();
  if (version != kModelVersion)
    throw Error("unsupported model format version " + std::to_string(version) +
                " (expected " + std::to_string(kModelVersion) + ")");

  const json& meta = field(doc, "metadata", "model");
  TreeConfig cfg;
  cfg.alpha = field(meta, "alpha", "metadata").get<double>();
  cfg.cu_variant =
      cu_variant_from_string(field(meta, "cu_variant", "metadata").get<std::string>());
  if (field(meta, "log_base", "metadata").get<std::string>() != "natural")
    throw Error("unsupported log base in metadata");
  cfg.min_count = field(meta, "min_count", "metadata").get<int>();
  cfg.seed = field(meta, "seed", "metadata").get<std::uint64_t>();
  cfg.softmax_sign = softmax_sign_from_string(
      field(meta, "softmax_sign", "metadata").get<std::string>());
  cfg.window = field(meta, "window", "metadata").get<int>();

  Vocabulary vocab;
  for (const json& tok : field(doc, "vocabulary", "model")) {
    if (!tok.is_string()) throw Error("vocabulary entries must be strings");
    const std::string s = tok.get<std::string>();
    const std::size_t before = vocab.size();
    vocab.intern(s);
    if (vocab.size() == before)
      throw Error("vocabulary holds duplicate token '" + s + "'");
  }

  const json& node_records = field(doc, "nodes", "model");
  if (!node_records.is_array() || node_records.empty())
    throw Error("model holds no nodes");

  std::vector<ConceptNode> nodes;
  nodes.reserve(node_records.size());
  std::unordered_set<NodeId> ids;
  for (const json& rec : node_records) {
    ConceptNode n;
    n.id = field(rec, "id", "node").get<NodeId>();
    const std::string where = "node " + std::to_string(n.id);
    const json& parent = field(rec, "parent", where);
    n.parent = parent.is_null() ? kNoNode : parent.get<NodeId>();
    for (const json& c : field(rec, "children", where))
      n.children.push_back(c.get<NodeId>());
    n.count = field(rec, "instance_count", where).get<std::int64_t>();

    const json& presence = field(rec, "attr_presence", where);
    const json& tallies = field(rec, "av_tallies", where);
    for (Attr a : kAllAttrs) {
      n.attr(a).presence = field(presence, attr_name(a), where).get<std::int64_t>();
      for (const json& pair : field(tallies, attr_name(a), where)) {
        if (!pair.is_array() || pair.size() != 2)
          throw Error(where + ": tally entries must be [word, weight] pairs");
        const WordId w = pair[0].get<WordId>();
        const double t = pair[1].get<double>();
        if (!vocab.contains(w))
          throw Error(where + " references out-of-vocabulary word id " +
                      std::to_string(w));
        if (!(t > 0.0))
          throw Error(where + " has non-positive tally for word id " +
                      std::to_string(w));
        if (!n.attr(a).tallies.emplace(w, t).second)
          throw Error(where + " repeats word id " + std::to_string(w));
      }
    }
    if (!ids.insert(n.id).second)
      throw Error("duplicate node id " + std::to_string(n.id));
    nodes.push_back(std::move(n));
  }

  const NodeId root = nodes.front().id;
  if (nodes.front().parent != kNoNode)
    throw Error("first node record must be the root (null parent)");
  for (const ConceptNode& n : nodes) {
    if (n.id != root && n.parent == kNoNode)
      throw Error("node " + std::to_string(n.id) + " has no parent but is not first");
    if (n.parent != kNoNode && !ids.count(n.parent))
      throw Error("node " + std::to_string(n.id) + " references missing parent " +
                  std::to_string(n.parent));
    for (NodeId c : n.children)
      if (!ids.count(c))
        throw Error("node " + std::to_string(n.id) + " references missing child " +
                    std::to_string(c));
  }

  ConceptTree tree = ConceptTree::from_parts(cfg, std::move(vocab),
                                             std::move(nodes), root);
  tree.check_invariants();
  return tree;
}

}  // namespace cobweb
