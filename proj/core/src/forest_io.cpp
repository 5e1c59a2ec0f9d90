// RFM1 model file. All integers and floats little-endian.
//
//   "RFM1"
//   params:   u32 n_trees, u32 max_depth (0xFFFFFFFF = unbounded),
//             u32 min_samples_split, u32 features_per_split, u8 bootstrap
//   classes:  u8 count, count x u8 code
//   bands:    u8 count, count x (u8 length, name bytes)
//   metadata: u16 length, scene id bytes, u64 seed, 8 x u64 class counts
//   u32 tree count, then each tree as pre-order nodes:
//     leaf:     u8 0, 8 x f64 class probabilities
//     internal: u8 1, u8 feature, f32 threshold, u64 byte length of the
//               left subtree, left subtree, right subtree

#include <limits>

#include "byte_io.hpp"
#include "terralabel/error.hpp"
#include "terralabel/forest.hpp"

namespace terralabel {

namespace {

constexpr std::uint32_t kUnboundedDepth = std::numeric_limits<std::uint32_t>::max();

void encode_subtree(const DecisionTree& tree, std::uint32_t index,
                    detail::ByteWriter& w) {
  const TreeNode& node = tree.nodes[index];
  if (node.is_leaf()) {
    w.u8(0);
    for (double p : node.distribution) w.f64(p);
    return;
  }
  w.u8(1);
  w.u8(static_cast<std::uint8_t>(node.feature));
  w.f32(node.threshold);
  detail::ByteWriter left;
  encode_subtree(tree, node.left, left);
  w.u64(left.size());
  w.bytes(std::move(left).take());
  encode_subtree(tree, node.right, w);
}

std::uint32_t decode_subtree(detail::ByteReader& r, DecisionTree& tree, int depth) {
  // Guards against stack exhaustion on corrupt input.
  if (depth > 100000) throw FormatError("model tree nesting too deep");
  const auto index = static_cast<std::uint32_t>(tree.nodes.size());
  tree.nodes.emplace_back();
  const std::uint8_t tag = r.u8();
  if (tag == 0) {
    for (auto& p : tree.nodes[index].distribution) p = r.f64();
    return index;
  }
  if (tag != 1) throw FormatError("bad model node tag " + std::to_string(tag));
  const std::uint8_t feature = r.u8();
  if (feature >= kNumBands) throw FormatError("model node feature out of range");
  const float threshold = r.f32();
  const std::uint64_t left_len = r.u64();
  const std::size_t left_start = r.position();
  const std::uint32_t left = decode_subtree(r, tree, depth + 1);
  if (r.position() - left_start != left_len) {
    throw FormatError("model left-subtree length mismatch");
  }
  const std::uint32_t right = decode_subtree(r, tree, depth + 1);
  TreeNode& node = tree.nodes[index];
  node.feature = feature;
  node.threshold = threshold;
  node.left = left;
  node.right = right;
  return index;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const ForestModel& model) {
  detail::ByteWriter w;
  w.bytes("RFM1");
  const ForestParams& p = model.params;
  w.u32(p.n_trees);
  w.u32(p.max_depth.value_or(kUnboundedDepth));
  w.u32(p.min_samples_split);
  w.u32(p.features_per_split);
  w.u8(p.bootstrap ? 1 : 0);

  w.u8(static_cast<std::uint8_t>(model.classes.size()));
  for (auto c : model.classes) w.u8(c);
  w.u8(static_cast<std::uint8_t>(model.band_order.size()));
  for (const auto& name : model.band_order) {
    w.u8(static_cast<std::uint8_t>(name.size()));
    w.bytes(name);
  }

  w.u16(static_cast<std::uint16_t>(model.meta.scene_id.size()));
  w.bytes(model.meta.scene_id);
  w.u64(model.meta.seed);
  for (auto c : model.meta.class_counts) w.u64(c);

  w.u32(static_cast<std::uint32_t>(model.trees.size()));
  for (const auto& tree : model.trees) {
    if (tree.nodes.empty()) throw ArgumentError("cannot serialize an empty tree");
    encode_subtree(tree, 0, w);
  }
  return std::move(w).take();
}

ForestModel decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || bytes[0] != 'R' || bytes[1] != 'F' || bytes[2] != 'M' ||
      bytes[3] != '1') {
    throw FormatError("not an RFM model file (bad magic)");
  }
  detail::ByteReader r(bytes);
  r.skip(4);
  ForestModel m;
  m.params.n_trees = r.u32();
  const std::uint32_t depth = r.u32();
  if (depth != kUnboundedDepth) m.params.max_depth = depth;
  m.params.min_samples_split = r.u32();
  m.params.features_per_split = r.u32();
  m.params.bootstrap = r.u8() != 0;

  const std::uint8_t n_classes = r.u8();
  for (int i = 0; i < n_classes; ++i) m.classes.push_back(r.u8());
  const std::uint8_t n_bands = r.u8();
  for (int i = 0; i < n_bands; ++i) {
    const auto name = r.take(r.u8());
    m.band_order.emplace_back(name.begin(), name.end());
  }

  const auto id = r.take(r.u16());
  m.meta.scene_id.assign(id.begin(), id.end());
  m.meta.seed = r.u64();
  for (auto& c : m.meta.class_counts) c = r.u64();

  const std::uint32_t n_trees = r.u32();
  if (n_trees != m.params.n_trees) throw FormatError("model tree count mismatch");
  m.trees.resize(n_trees);
  for (auto& tree : m.trees) decode_subtree(r, tree, 0);
  if (r.remaining() != 0) throw FormatError("trailing bytes after model");
  return m;
}

std::uint64_t write_model(const ForestModel& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  detail::write_file(path, bytes);
  return bytes.size();
}

ForestModel read_model(const std::filesystem::path& path) {
  return decode_model(detail::read_file(path));
}

}  // namespace terralabel
