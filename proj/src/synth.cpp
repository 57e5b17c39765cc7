#include "anchorframe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "anchorframe/error.hpp"
#include "json_util.hpp"

namespace anchorframe {

using nlohmann::json;

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SplitMix64::hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                               std::uint64_t c) {
  SplitMix64 g(seed);
  std::uint64_t h = g.next();
  for (std::uint64_t v : {a, b, c}) {
    SplitMix64 step(h ^ (v * 0xD1B54A32D192ED03ULL));
    h = step.next();
  }
  return h;
}

std::pair<int, int> PathSpec::position(std::size_t t) const {
  const double td = static_cast<double>(t);
  double x = start[0];
  double y = start[1];
  if (kind != PathKind::kStatic) {
    x += velocity[0] * td;
    y += velocity[1] * td;
  }
  if (kind == PathKind::kSinusoidal) {
    const double phase = 2.0 * std::numbers::pi * td / period;
    x += amplitude[0] * std::sin(phase);
    y += amplitude[1] * std::sin(phase);
  }
  return {static_cast<int>(std::floor(x + 0.5)), static_cast<int>(std::floor(y + 0.5))};
}

namespace {

[[noreturn]] void spec_fail(const std::string& name, const std::string& msg) {
  throw Error(ErrorCode::kSpec, "scene '" + name + "': " + msg);
}

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

double lattice(std::uint64_t key, long gx, long gy) {
  const std::uint64_t h = SplitMix64::hash(key, static_cast<std::uint64_t>(gx),
                                           static_cast<std::uint64_t>(gy));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double texture_value(const TextureSpec& tex, std::uint64_t key, long lx, long ly,
                     std::size_t t) {
  switch (tex.kind) {
    case TextureKind::kFlat:
      return 0.5;
    case TextureKind::kChecker:
      return ((floor_div(lx, tex.cell) + floor_div(ly, tex.cell)) & 1) ? 1.0 : 0.0;
    case TextureKind::kDynamicNoise:
      key = SplitMix64::hash(key, 0xD1CEULL, t);
      [[fallthrough]];
    case TextureKind::kNoise: {
      const long gx = floor_div(lx, tex.cell);
      const long gy = floor_div(ly, tex.cell);
      const double fx = static_cast<double>(lx - gx * tex.cell) / tex.cell;
      const double fy = static_cast<double>(ly - gy * tex.cell) / tex.cell;
      const double a = lattice(key, gx, gy);
      const double b = lattice(key, gx + 1, gy);
      const double c = lattice(key, gx, gy + 1);
      const double d = lattice(key, gx + 1, gy + 1);
      const double top = a + fx * (b - a);
      const double bottom = c + fx * (d - c);
      return top + fy * (bottom - top);
    }
  }
  return 0.5;
}

std::array<std::uint8_t, 3> shade(const TextureSpec& tex, double v) {
  std::array<std::uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    const double lo = tex.dark[c];
    const double hi = tex.light[c];
    rgb[c] = static_cast<std::uint8_t>(std::clamp(std::floor(lo + v * (hi - lo) + 0.5), 0.0, 255.0));
  }
  return rgb;
}

/// Texture rendered over a w x h local grid. Static textures are rendered
/// once per scene; dynamic ones once per frame.
class Tile {
 public:
  Tile(const TextureSpec& tex, std::uint64_t key, int w, int h)
      : tex_(tex), key_(key), w_(w), h_(h) {
    if (tex_.kind != TextureKind::kDynamicNoise) render(0);
  }

  const std::uint8_t* at(int lx, int ly, std::size_t t) {
    if (tex_.kind == TextureKind::kDynamicNoise && rendered_for_ != t) render(t);
    return &rgb_[(static_cast<std::size_t>(ly) * w_ + lx) * 3];
  }

 private:
  void render(std::size_t t) {
    rgb_.resize(static_cast<std::size_t>(w_) * h_ * 3);
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        const auto c = shade(tex_, texture_value(tex_, key_, x, y, t));
        std::copy(c.begin(), c.end(), rgb_.begin() + (static_cast<std::size_t>(y) * w_ + x) * 3);
      }
    }
    rendered_for_ = t;
  }

  TextureSpec tex_;
  std::uint64_t key_;
  int w_;
  int h_;
  std::vector<std::uint8_t> rgb_;
  std::size_t rendered_for_ = static_cast<std::size_t>(-1);
};

struct Layout {
  PixelRect target;  // unclipped
  std::optional<PixelRect> patch;
  bool patch_exposed = false;
  std::optional<PixelRect> occluder;
};

PixelRect patch_rect(const PixelRect& target, const std::array<double, 4>& rel) {
  const int w = target.width();
  const int h = target.height();
  return {target.x0 + round_half_up(rel[0] * w), target.y0 + round_half_up(rel[1] * h),
          target.x0 + round_half_up(rel[2] * w), target.y0 + round_half_up(rel[3] * h)};
}

Layout layout_at(const SceneSpec& spec, std::size_t t) {
  Layout l;
  const auto [tx, ty] = spec.target.path.position(t);
  l.target = {tx, ty, tx + spec.target.size[0], ty + spec.target.size[1]};
  if (const auto& patch = spec.target.attribute_patch) {
    l.patch = patch_rect(l.target, patch->box);
    l.patch_exposed = patch->visible_interval &&
                      t >= (*patch->visible_interval)[0] &&
                      t <= (*patch->visible_interval)[1];
  }
  if (const auto& occ = spec.occluder) {
    if (t >= occ->active_interval[0] && t <= occ->active_interval[1]) {
      const auto [ox, oy] = occ->path.position(t);
      l.occluder = PixelRect{ox, oy, ox + occ->size[0], oy + occ->size[1]};
    }
  }
  return l;
}

bool contains(const PixelRect& r, int x, int y) {
  return x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1;
}

BoundingBox to_box(const PixelRect& r) {
  return {static_cast<double>(r.x0), static_cast<double>(r.y0),
          static_cast<double>(r.x1), static_cast<double>(r.y1)};
}

void validate_texture(const SceneSpec& s, const TextureSpec& t, const char* what) {
  if (t.cell < 1) spec_fail(s.name, std::string(what) + " texture cell must be >= 1");
}

void validate_path(const SceneSpec& s, const PathSpec& p, const char* what) {
  if (p.kind == PathKind::kSinusoidal && !(p.period > 0.0)) {
    spec_fail(s.name, std::string(what) + " path period must be > 0");
  }
  for (double v : {p.start[0], p.start[1], p.velocity[0], p.velocity[1],
                   p.amplitude[0], p.amplitude[1]}) {
    if (!std::isfinite(v)) spec_fail(s.name, std::string(what) + " path is not finite");
  }
}

}  // namespace

void SceneSpec::validate() const {
  if (width < 8 || height < 8) spec_fail(name, "frame must be at least 8x8");
  if (num_frames < 1) spec_fail(name, "num_frames must be >= 1");
  validate_texture(*this, background, "background");
  if (target.size[0] < 1 || target.size[1] < 1) spec_fail(name, "target size must be positive");
  validate_texture(*this, target.texture, "target");
  validate_path(*this, target.path, "target");
  if (const auto& patch = target.attribute_patch) {
    const auto& b = patch->box;
    for (double v : b) {
      if (!(v >= 0.0 && v <= 1.0)) spec_fail(name, "attribute patch box outside [0,1]");
    }
    if (!(b[0] < b[2] && b[1] < b[3])) spec_fail(name, "attribute patch box is empty");
    const PixelRect r = patch_rect({0, 0, target.size[0], target.size[1]}, b);
    if (r.empty()) spec_fail(name, "attribute patch rasterizes to zero pixels");
    validate_texture(*this, patch->texture, "attribute patch");
    if (const auto& vi = patch->visible_interval) {
      if ((*vi)[0] > (*vi)[1] || (*vi)[1] >= num_frames) {
        spec_fail(name, "attribute visible_interval must satisfy a0 <= a1 < num_frames");
      }
    }
  }
  if (occluder) {
    if (occluder->size[0] < 1 || occluder->size[1] < 1) {
      spec_fail(name, "occluder size must be positive");
    }
    validate_texture(*this, occluder->texture, "occluder");
    validate_path(*this, occluder->path, "occluder");
    const auto& ai = occluder->active_interval;
    if (ai[0] > ai[1] || ai[1] >= num_frames) {
      spec_fail(name, "occluder active_interval must satisfy t0 <= t1 < num_frames");
    }
  }
  const PixelRect screen{0, 0, width, height};
  for (std::size_t t = 0; t < num_frames; ++t) {
    if (intersect(layout_at(*this, t).target, screen).empty()) {
      spec_fail(name, "target leaves the frame at t=" + std::to_string(t));
    }
  }
}

std::pair<VideoSequence, GroundTruth> generate_scene(const SceneSpec& spec) {
  spec.validate();
  const PixelRect screen{0, 0, spec.width, spec.height};
  const auto& tgt = spec.target;
  Tile background(spec.background, SplitMix64::hash(spec.seed, 1), spec.width, spec.height);
  Tile target_tile(tgt.texture, SplitMix64::hash(spec.seed, 2), tgt.size[0], tgt.size[1]);
  std::optional<Tile> patch_tile;
  if (tgt.attribute_patch) {
    const PixelRect r = patch_rect({0, 0, tgt.size[0], tgt.size[1]}, tgt.attribute_patch->box);
    patch_tile.emplace(tgt.attribute_patch->texture, SplitMix64::hash(spec.seed, 3), r.width(),
                       r.height());
  }
  std::optional<Tile> occluder_tile;
  if (spec.occluder) {
    occluder_tile.emplace(spec.occluder->texture, SplitMix64::hash(spec.seed, 4),
                          spec.occluder->size[0], spec.occluder->size[1]);
  }

  std::vector<Frame> frames;
  frames.reserve(spec.num_frames);
  GroundTruth truth;
  truth.width = spec.width;
  truth.height = spec.height;
  truth.frames.reserve(spec.num_frames);

  for (std::size_t t = 0; t < spec.num_frames; ++t) {
    const Layout l = layout_at(spec, t);
    Frame f(spec.width, spec.height, 3);
    long long target_visible = 0;
    long long patch_visible = 0;
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const std::uint8_t* rgb = nullptr;
        if (l.occluder && contains(*l.occluder, x, y)) {
          rgb = occluder_tile->at(x - l.occluder->x0, y - l.occluder->y0, t);
        } else if (contains(l.target, x, y)) {
          ++target_visible;
          if (l.patch_exposed && contains(*l.patch, x, y)) {
            ++patch_visible;
            rgb = patch_tile->at(x - l.patch->x0, y - l.patch->y0, t);
          } else {
            rgb = target_tile.at(x - l.target.x0, y - l.target.y0, t);
          }
        } else {
          rgb = background.at(x, y, t);
        }
        for (int c = 0; c < 3; ++c) f.at(x, y, c) = rgb[c];
      }
    }
    TruthFrame tf;
    tf.box = to_box(intersect(l.target, screen));
    tf.visibility = static_cast<double>(target_visible) /
                    static_cast<double>(l.target.area());
    if (l.patch) {
      tf.attribute_visibility = static_cast<double>(patch_visible) /
                                static_cast<double>(l.patch->area());
      const PixelRect on_screen = intersect(*l.patch, screen);
      if (!on_screen.empty()) tf.attribute_box = to_box(on_screen);
    }
    truth.frames.push_back(tf);
    frames.push_back(std::move(f));
  }
  return {VideoSequence(std::move(frames)), std::move(truth)};
}

// ---- JSON ----------------------------------------------------------------

namespace {

const char* texture_name(TextureKind k) {
  switch (k) {
    case TextureKind::kFlat: return "flat";
    case TextureKind::kChecker: return "checker";
    case TextureKind::kNoise: return "noise";
    case TextureKind::kDynamicNoise: return "dynamic_noise";
  }
  return "noise";
}

const char* path_name(PathKind k) {
  switch (k) {
    case PathKind::kStatic: return "static";
    case PathKind::kLinear: return "linear";
    case PathKind::kSinusoidal: return "sinusoidal";
  }
  return "static";
}

json box_json(const BoundingBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

BoundingBox box_from(const json& j) {
  const auto v = j.get<std::array<double, 4>>();
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace

void to_json(json& j, const TextureSpec& t) {
  j = json{{"kind", texture_name(t.kind)}, {"cell", t.cell}, {"dark", t.dark},
           {"light", t.light}};
}

void from_json(const json& j, TextureSpec& t) {
  detail::check_keys(j, {"kind", "cell", "dark", "light"}, "texture", ErrorCode::kSpec);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "flat") t.kind = TextureKind::kFlat;
  else if (kind == "checker") t.kind = TextureKind::kChecker;
  else if (kind == "noise") t.kind = TextureKind::kNoise;
  else if (kind == "dynamic_noise") t.kind = TextureKind::kDynamicNoise;
  else throw Error(ErrorCode::kSpec, "unknown texture kind '" + kind + "'");
  detail::read_if(j, "cell", t.cell);
  detail::read_if(j, "dark", t.dark);
  detail::read_if(j, "light", t.light);
}

void to_json(json& j, const PathSpec& p) {
  j = json{{"type", path_name(p.kind)}, {"start", p.start}};
  if (p.kind != PathKind::kStatic) j["velocity"] = p.velocity;
  if (p.kind == PathKind::kSinusoidal) {
    j["amplitude"] = p.amplitude;
    j["period"] = p.period;
  }
}

void from_json(const json& j, PathSpec& p) {
  detail::check_keys(j, {"type", "start", "velocity", "amplitude", "period"}, "path",
                     ErrorCode::kSpec);
  const std::string type = j.at("type").get<std::string>();
  if (type == "static") p.kind = PathKind::kStatic;
  else if (type == "linear") p.kind = PathKind::kLinear;
  else if (type == "sinusoidal") p.kind = PathKind::kSinusoidal;
  else throw Error(ErrorCode::kSpec, "unknown path type '" + type + "'");
  j.at("start").get_to(p.start);
  detail::read_if(j, "velocity", p.velocity);
  detail::read_if(j, "amplitude", p.amplitude);
  detail::read_if(j, "period", p.period);
}

void to_json(json& j, const SceneSpec& s) {
  json target{{"size", s.target.size}, {"texture", s.target.texture},
              {"path", s.target.path}};
  if (const auto& patch = s.target.attribute_patch) {
    json pj{{"box", patch->box}, {"texture", patch->texture}};
    pj["visible_interval"] =
        patch->visible_interval ? json(*patch->visible_interval) : json(nullptr);
    target["attribute_patch"] = pj;
  }
  j = json{{"name", s.name},        {"width", s.width},
           {"height", s.height},    {"num_frames", s.num_frames},
           {"seed", s.seed},        {"background", s.background},
           {"target", target}};
  if (const auto& occ = s.occluder) {
    j["occluder"] = json{{"size", occ->size},
                         {"texture", occ->texture},
                         {"path", occ->path},
                         {"active_interval", occ->active_interval}};
  } else {
    j["occluder"] = nullptr;
  }
}

void from_json(const json& j, SceneSpec& s) {
  detail::check_keys(j, {"name", "width", "height", "num_frames", "seed", "background",
                         "target", "occluder", "description"},
                     "scene", ErrorCode::kSpec);
  detail::read_if(j, "name", s.name);
  j.at("width").get_to(s.width);
  j.at("height").get_to(s.height);
  j.at("num_frames").get_to(s.num_frames);
  detail::read_if(j, "seed", s.seed);
  detail::read_if(j, "background", s.background);

  const json& tj = j.at("target");
  detail::check_keys(tj, {"size", "texture", "path", "attribute_patch"}, "target",
                     ErrorCode::kSpec);
  tj.at("size").get_to(s.target.size);
  detail::read_if(tj, "texture", s.target.texture);
  tj.at("path").get_to(s.target.path);
  s.target.attribute_patch.reset();
  if (auto it = tj.find("attribute_patch"); it != tj.end() && !it->is_null()) {
    detail::check_keys(*it, {"box", "texture", "visible_interval"}, "attribute_patch",
                       ErrorCode::kSpec);
    AttributePatchSpec patch;
    detail::read_if(*it, "box", patch.box);
    detail::read_if(*it, "texture", patch.texture);
    if (auto vi = it->find("visible_interval"); vi != it->end() && !vi->is_null()) {
      patch.visible_interval = vi->get<std::array<std::size_t, 2>>();
    }
    s.target.attribute_patch = patch;
  }
  s.occluder.reset();
  if (auto it = j.find("occluder"); it != j.end() && !it->is_null()) {
    detail::check_keys(*it, {"size", "texture", "path", "active_interval"}, "occluder",
                       ErrorCode::kSpec);
    OccluderSpec occ;
    it->at("size").get_to(occ.size);
    detail::read_if(*it, "texture", occ.texture);
    it->at("path").get_to(occ.path);
    it->at("active_interval").get_to(occ.active_interval);
    s.occluder = occ;
  }
}

void to_json(json& j, const GroundTruth& g) {
  json frames = json::array();
  for (const auto& f : g.frames) {
    frames.push_back(json{{"box", box_json(f.box)},
                          {"visibility", f.visibility},
                          {"attribute_visibility", f.attribute_visibility},
                          {"attribute_box", f.attribute_box ? box_json(*f.attribute_box)
                                                            : json(nullptr)}});
  }
  j = json{{"width", g.width}, {"height", g.height}, {"frames", frames}};
}

void from_json(const json& j, GroundTruth& g) {
  detail::check_keys(j, {"width", "height", "frames"}, "truth", ErrorCode::kInput);
  j.at("width").get_to(g.width);
  j.at("height").get_to(g.height);
  g.frames.clear();
  for (const auto& fj : j.at("frames")) {
    TruthFrame f;
    f.box = box_from(fj.at("box"));
    fj.at("visibility").get_to(f.visibility);
    fj.at("attribute_visibility").get_to(f.attribute_visibility);
    if (auto it = fj.find("attribute_box"); it != fj.end() && !it->is_null()) {
      f.attribute_box = box_from(*it);
    }
    g.frames.push_back(f);
  }
}

namespace {

json read_json_file(const std::filesystem::path& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(code, path.string() + ": " + e.what());
  }
}

}  // namespace

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  const json j = read_json_file(path, ErrorCode::kSpec);
  try {
    SceneSpec s = j.get<SceneSpec>();
    if (s.name.empty()) s.name = path.stem().string();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSpec, path.string() + ": " + e.what());
  }
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  const json j = read_json_file(path, ErrorCode::kInput);
  try {
    return j.get<GroundTruth>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, path.string() + ": " + e.what());
  }
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << json(truth).dump(2) << "\n";
}

std::vector<SceneSpec> load_scene_corpus(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SceneSpec> specs;
  for (const auto& f : files) specs.push_back(read_scene_spec(f));
  return specs;
}

}  // namespace anchorframe
