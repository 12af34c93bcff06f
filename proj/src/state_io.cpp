#include "morpher/state_io.hpp"

#include "morpher/binary_io.hpp"

namespace morpher {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 28;

enum Flag : std::uint32_t {
  kCenterLabels = 1u << 0,
  kRenormalize = 1u << 1,
  kFreezeGraph = 1u << 2,
  kFreezeText = 1u << 3,
  kFreezeProjector = 1u << 4,
};

std::uint32_t encode_flags(const AlignOptions& o) {
  std::uint32_t f = 0;
  if (o.center_labels) f |= kCenterLabels;
  if (o.renormalize_graph_output) f |= kRenormalize;
  if (o.freeze_graph_prompt) f |= kFreezeGraph;
  if (o.freeze_text_prompt) f |= kFreezeText;
  if (o.freeze_projector) f |= kFreezeProjector;
  return f;
}

AlignOptions decode_flags(std::uint32_t f) {
  AlignOptions o;
  o.center_labels = f & kCenterLabels;
  o.renormalize_graph_output = f & kRenormalize;
  o.freeze_graph_prompt = f & kFreezeGraph;
  o.freeze_text_prompt = f & kFreezeText;
  o.freeze_projector = f & kFreezeProjector;
  return o;
}

std::uint32_t dim32(Eigen::Index v) { return static_cast<std::uint32_t>(v); }

void check_size(const std::filesystem::path& path, std::uint64_t rows, std::uint64_t cols) {
  if (rows * cols > kMaxElements) throw FormatError(path.string() + ": implausible matrix size");
}

}  // namespace

void save_prompt_state(const PromptState& state, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic("MPST");
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(state.mode));
  w.u32(static_cast<std::uint32_t>(state.style));
  w.f64(state.graph_prompt.delta_inner);
  w.f64(state.graph_prompt.delta_cross);
  w.f64(state.graph_prompt.init_std_multiplier);
  w.f64(state.tau);
  w.u32(encode_flags(state.options));
  w.u32(dim32(state.graph_prompt.tokens.rows()));
  w.u32(dim32(state.graph_prompt.tokens.cols()));
  w.u32(dim32(state.text_prompt.tokens.rows()));
  w.u32(dim32(state.proj_weight.rows()));
  w.u32(dim32(state.proj_weight.cols()));
  w.u32(state.head ? 1 : 0);
  w.u32(state.head ? dim32(state.head->weight.rows()) : 0);
  w.matrix(state.graph_prompt.tokens);
  w.matrix(state.text_prompt.tokens);
  w.matrix(state.proj_weight);
  w.vector(state.proj_bias);
  if (state.head) {
    w.matrix(state.head->weight);
    w.vector(state.head->bias);
  }
  w.close();
}

PromptState load_prompt_state(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic("MPST");
  if (const auto v = r.u32(); v != kVersion) {
    throw FormatError(path.string() + ": unsupported MPST version " + std::to_string(v));
  }
  PromptState s;
  const auto mode = r.u32();
  const auto style = r.u32();
  if (mode > static_cast<std::uint32_t>(Mode::aio_head)) throw FormatError(path.string() + ": bad mode");
  if (style > static_cast<std::uint32_t>(PromptStyle::improved)) {
    throw FormatError(path.string() + ": bad prompt style");
  }
  s.mode = static_cast<Mode>(mode);
  s.style = static_cast<PromptStyle>(style);
  s.graph_prompt.delta_inner = r.f64();
  s.graph_prompt.delta_cross = r.f64();
  s.graph_prompt.init_std_multiplier = r.f64();
  s.tau = r.f64();
  s.options = decode_flags(r.u32());
  const std::uint64_t ng = r.u32(), d = r.u32(), nt = r.u32(), dt = r.u32(), dg = r.u32();
  const auto has_head = r.u32();
  const std::uint64_t c = r.u32();
  if (has_head > 1) throw FormatError(path.string() + ": bad head flag");
  check_size(path, ng, d);
  check_size(path, nt, dt);
  check_size(path, dt, dg);
  check_size(path, c, dg);
  s.graph_prompt.tokens = r.matrix(ng, d);
  s.text_prompt.tokens = r.matrix(nt, dt);
  s.proj_weight = r.matrix(dt, dg);
  s.proj_bias = r.vector(dt);
  if (has_head) s.head = TaskHead{r.matrix(c, dg), r.vector(c)};
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes");
  return s;
}

}  // namespace morpher
