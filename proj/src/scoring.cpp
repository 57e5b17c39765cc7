#include "anchorframe/scoring.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "anchorframe/error.hpp"
#include "builtin_data.hpp"

namespace anchorframe {

void SelectorConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kConfig, "selector config: " + msg);
  };
  if (!(tau > 0.0)) fail("tau must be > 0");
  if (delta_t < 1) fail("delta_t must be >= 1");
  if (top_m < 1) fail("top_m must be >= 1");
  if (!(lambda_b >= 0.0) || !(lambda_c >= 0.0) || !(lambda_p >= 0.0)) {
    fail("lambda weights must be non-negative");
  }
  if (lambda_b + lambda_c + lambda_p <= 0.0) fail("at least one lambda must be > 0");
  if (!(spatial_penalty >= 0.0 && spatial_penalty <= 1.0)) {
    fail("spatial_penalty must lie in [0,1]");
  }
}

std::string_view to_string(SpatialPrior prior) {
  switch (prior) {
    case SpatialPrior::kNone: return "none";
    case SpatialPrior::kLeft: return "left";
    case SpatialPrior::kRight: return "right";
    case SpatialPrior::kTop: return "top";
    case SpatialPrior::kBottom: return "bottom";
    case SpatialPrior::kCenter: return "center";
  }
  return "none";
}

std::string_view to_string(Attribute attribute) {
  switch (attribute) {
    case Attribute::kColor: return "color";
    case Attribute::kMaterial: return "material";
    case Attribute::kPart: return "part";
    case Attribute::kShape: return "shape";
    case Attribute::kStyle: return "style";
    case Attribute::kObjectVisibility: return "object-visibility";
  }
  return "object-visibility";
}

namespace {

std::optional<SpatialPrior> maybe_prior(std::string_view s) {
  for (auto p : {SpatialPrior::kNone, SpatialPrior::kLeft, SpatialPrior::kRight,
                 SpatialPrior::kTop, SpatialPrior::kBottom, SpatialPrior::kCenter}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::optional<Attribute> maybe_attribute(std::string_view s) {
  for (auto a : {Attribute::kColor, Attribute::kMaterial, Attribute::kPart,
                 Attribute::kShape, Attribute::kStyle, Attribute::kObjectVisibility}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

SpatialPrior spatial_prior_from_string(std::string_view s) {
  if (auto p = maybe_prior(s)) return *p;
  throw Error(ErrorCode::kInput, "unknown spatial prior '" + std::string(s) + "'");
}

Attribute attribute_from_string(std::string_view s) {
  if (auto a = maybe_attribute(s)) return *a;
  throw Error(ErrorCode::kInput, "unknown attribute '" + std::string(s) + "'");
}

KeywordTables KeywordTables::builtin() {
  static const KeywordTables tables = parse(detail::builtin_keywords_text());
  return tables;
}

KeywordTables KeywordTables::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open keyword table " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

KeywordTables KeywordTables::parse(std::string_view text) {
  KeywordTables tables;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw Error(ErrorCode::kParse,
                  "keyword table line " + std::to_string(lineno) +
                      ": expected category<TAB>word");
    }
    std::string category = line.substr(0, tab);
    if (category != "verb" && category != "stop" && !maybe_prior(category) &&
        !maybe_attribute(category)) {
      throw Error(ErrorCode::kParse, "keyword table line " + std::to_string(lineno) +
                                         ": unknown category '" + category + "'");
    }
    tables.add(std::move(category), lowercase(line.substr(tab + 1)));
  }
  return tables;
}

void KeywordTables::add(std::string category, std::string word) {
  words_.insert_or_assign(std::move(word), std::move(category));
}

const std::string* KeywordTables::category_of(const std::string& word) const {
  const auto it = words_.find(word);
  return it == words_.end() ? nullptr : &it->second;
}

EditPrompt parse_prompt(std::string_view text, const KeywordTables& tables) {
  EditPrompt prompt;
  prompt.raw = std::string(text);
  const std::string lower = lowercase(text);

  std::vector<std::string> tokens;
  std::string current;
  for (char ch : lower) {
    if (is_word_byte(static_cast<unsigned char>(ch))) {
      current.push_back(ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));

  bool have_prior = false;
  bool have_attribute = false;
  std::vector<std::vector<std::string>> runs(1);
  for (const auto& tok : tokens) {
    const std::string* category = tables.category_of(tok);
    if (category == nullptr) {
      runs.back().push_back(tok);
      continue;
    }
    if (!runs.back().empty()) runs.emplace_back();
    if (auto p = maybe_prior(*category)) {
      if (!have_prior) prompt.spatial_prior = *p;
      have_prior = true;
    } else if (auto a = maybe_attribute(*category)) {
      if (!have_attribute) prompt.attribute = *a;
      have_attribute = true;
    }
  }
  // The edit target is the first noun phrase left after stripping verbs,
  // function words, locations and attribute values.
  for (const auto& run : runs) {
    if (run.empty()) continue;
    for (const auto& word : run) {
      if (!prompt.object_prompt.empty()) prompt.object_prompt += ' ';
      prompt.object_prompt += word;
    }
    break;
  }
  if (prompt.object_prompt.empty()) {
    throw Error(ErrorCode::kUnparseablePrompt,
                "no target object found in prompt '" + prompt.raw + "'");
  }
  return prompt;
}

double completeness_score(const BoundingBox& box, double width, double height,
                          double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::kConfig, "tau must be > 0");
  require_valid(box);
  const BoundingBox b = clamp_box(box, width, height);
  const double d_min = std::min({b.x1, b.y1, width - b.x2, height - b.y2});
  return std::min(1.0, std::max(0.0, d_min / (tau * std::min(width, height))));
}

double base_score(double s_text, double s_comp) { return s_text * s_comp; }

double utility(double s_base, double s_cyc, double s_attr,
               const SelectorConfig& cfg) {
  cfg.validate();
  return cfg.lambda_b * s_base + cfg.lambda_c * s_cyc + cfg.lambda_p * s_attr;
}

double spatial_prior_factor(const BoundingBox& box, SpatialPrior prior,
                            double width, double height, double penalty) {
  const double cx = box.center_x();
  const double cy = box.center_y();
  bool ok = true;
  switch (prior) {
    case SpatialPrior::kNone: ok = true; break;
    case SpatialPrior::kLeft: ok = cx < width / 2; break;
    case SpatialPrior::kRight: ok = cx >= width / 2; break;
    case SpatialPrior::kTop: ok = cy < height / 2; break;
    case SpatialPrior::kBottom: ok = cy >= height / 2; break;
    case SpatialPrior::kCenter:
      ok = cx >= width / 4 && cx <= 3 * width / 4 && cy >= height / 4 &&
           cy <= 3 * height / 4;
      break;
  }
  return ok ? 1.0 : penalty;
}

namespace {

CycleLeg run_leg(const VideoSequence& video, FrameIndex t, const BoundingBox& box,
                 std::size_t steps, Direction out_dir,
                 const SegmentTracker& tracker) {
  const Direction back_dir =
      out_dir == Direction::kForward ? Direction::kBackward : Direction::kForward;
  CycleLeg leg;
  leg.direction = out_dir;
  const auto out = tracker.track_segment(video, t, box, out_dir, steps);
  leg.steps = out.size();
  if (out.empty() || !out.back().box.valid()) return leg;
  const FrameIndex end = out_dir == Direction::kForward ? t + out.size() : t - out.size();
  const auto back = tracker.track_segment(video, end, out.back().box, back_dir, out.size());
  leg.steps += back.size();
  for (const auto& s : out) leg.occluded_steps += s.occluded ? 1 : 0;
  for (const auto& s : back) leg.occluded_steps += s.occluded ? 1 : 0;
  if (back.size() != out.size() || !back.back().box.valid()) return leg;
  leg.returned_box = back.back().box;
  const double evidence =
      1.0 - static_cast<double>(leg.occluded_steps) / static_cast<double>(leg.steps);
  leg.score = iou(box, *leg.returned_box) * evidence;
  return leg;
}

}  // namespace

std::optional<CycleResult> cycle_consistency(const VideoSequence& video,
                                             FrameIndex t, const BoundingBox& box,
                                             std::size_t delta_t,
                                             const SegmentTracker& tracker) {
  require_valid(box);
  if (t >= video.size()) {
    throw Error(ErrorCode::kInput, "frame " + std::to_string(t) + " outside sequence");
  }
  const std::size_t fwd = std::min(delta_t, video.size() - 1 - t);
  const std::size_t bwd = std::min(delta_t, t);
  if (fwd == 0 && bwd == 0) return std::nullopt;
  CycleResult result;
  if (fwd > 0) result.legs.push_back(run_leg(video, t, box, fwd, Direction::kForward, tracker));
  if (bwd > 0) result.legs.push_back(run_leg(video, t, box, bwd, Direction::kBackward, tracker));
  double sum = 0.0;
  for (const auto& leg : result.legs) sum += leg.score;
  result.score = sum / static_cast<double>(result.legs.size());
  return result;
}

std::optional<double> cycle_consistency_score(const VideoSequence& video,
                                              FrameIndex t,
                                              const BoundingBox& box,
                                              std::size_t delta_t,
                                              const SegmentTracker& tracker) {
  const auto r = cycle_consistency(video, t, box, delta_t, tracker);
  if (!r) return std::nullopt;
  return r->score;
}

std::optional<double> cycle_consistency_score(const VideoSequence& video,
                                              FrameIndex t,
                                              const BoundingBox& box,
                                              std::size_t delta_t,
                                              const TrackerConfig& tracker_cfg) {
  return cycle_consistency_score(video, t, box, delta_t, KcfTracker(tracker_cfg));
}

double region_weighted_mse(const Tensor& pred, const Tensor& target,
                           const Tensor& mask, double gamma) {
  if (pred.shape != target.shape || pred.shape != mask.shape ||
      pred.data.size() != target.data.size() || pred.data.size() != mask.data.size()) {
    throw Error(ErrorCode::kShape, "pred, target and mask must share one shape");
  }
  if (pred.data.empty()) throw Error(ErrorCode::kShape, "tensors are empty");
  if (!(gamma >= 0.0)) throw Error(ErrorCode::kConfig, "gamma must be >= 0");
  double plain = 0.0;
  double masked = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double m = mask.data[i];
    if (m != 0.0 && m != 1.0) {
      throw Error(ErrorCode::kInput, "mask must be binary");
    }
    const double r = pred.data[i] - target.data[i];
    plain += r * r;
    masked += (r * m) * (r * m);
  }
  const double n = static_cast<double>(pred.data.size());
  return plain / n + gamma * (masked / n);
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(const std::vector<std::uint8_t>& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
  std::vector<std::uint8_t> out = {'A', 'F', 'T', '1'};
  put_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
  for (auto d : tensor.shape) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : tensor.data) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

Tensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
  auto fail = [](const std::string& msg, std::size_t offset) {
    throw Error(ErrorCode::kParse,
                "tensor: " + msg + " at byte offset " + std::to_string(offset));
  };
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "AFT1", 4) != 0) {
    fail("missing AFT1 magic", 0);
  }
  const auto rank = static_cast<std::size_t>(get_le(bytes, 4, 4));
  if (bytes.size() < 8 + 4 * rank) fail("truncated shape", bytes.size());
  Tensor t;
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    t.shape.push_back(static_cast<std::size_t>(get_le(bytes, 8 + 4 * i, 4)));
    count *= t.shape.back();
  }
  const std::size_t payload = 8 + 4 * rank;
  if (bytes.size() != payload + 8 * count) {
    fail("payload holds " + std::to_string(bytes.size() - payload) +
             " bytes, expected " + std::to_string(8 * count),
         payload);
  }
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.data[i] = std::bit_cast<double>(get_le(bytes, payload + 8 * i, 8));
  }
  return t;
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace anchorframe
