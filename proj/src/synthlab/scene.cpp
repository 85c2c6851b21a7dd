#include <algorithm>
#include <cmath>
#include <numbers>

#include "activscope/error.hpp"
#include "activscope/random.hpp"
#include "activscope/synthlab.hpp"

namespace activscope::synth {

namespace {

constexpr double kPi = std::numbers::pi;

// H&E-like palette.
constexpr Rgb kStroma{236, 178, 206};
constexpr Rgb kCollagen{247, 208, 224};
constexpr Rgb kCollagenFiber{222, 156, 190};
constexpr Rgb kLumen{249, 247, 250};
constexpr Rgb kLumenRim{214, 150, 190};
constexpr Rgb kCytoplasm{190, 140, 200};
constexpr Rgb kNucleus{84, 34, 118};
constexpr Rgb kHalo{234, 224, 242};
constexpr Rgb kLymphocyte{44, 40, 152};

std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

Rgb jitter(Rgb c, double delta) {
  return {clamp_byte(c[0] + delta), clamp_byte(c[1] + delta), clamp_byte(c[2] + delta)};
}

struct Canvas {
  RgbImage& image;
  Box painted{0, 0, 0, 0};
  int min_y = 0, min_x = 0, max_y = -1, max_x = -1;

  void paint(int y, int x, Rgb c) {
    if (!image.contains(y, x)) return;
    image.set(y, x, c);
    if (max_y < min_y) {
      min_y = max_y = y;
      min_x = max_x = x;
    } else {
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
    }
  }
  Box extent() const { return {min_y, min_x, max_y - min_y + 1, max_x - min_x + 1}; }
};

void disc(Canvas& canvas, double cy, double cx, double r, Rgb c, Rng& rng, double noise) {
  const int y0 = static_cast<int>(std::floor(cy - r));
  const int y1 = static_cast<int>(std::ceil(cy + r));
  const int x0 = static_cast<int>(std::floor(cx - r));
  const int x1 = static_cast<int>(std::ceil(cx + r));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dy = y - cy, dx = x - cx;
      if (dy * dy + dx * dx <= r * r) canvas.paint(y, x, jitter(c, uniform(rng, -noise, noise)));
    }
  }
}

// Irregular blob radius: base radius modulated by two harmonics, clamped to
// the recipe's size range.
struct BlobShape {
  double cy, cx, base, lo, hi, a3, p3, a5, p5;

  double radius(double theta) const {
    const double r = base * (1.0 + a3 * std::sin(3.0 * theta + p3) + a5 * std::sin(5.0 * theta + p5));
    return std::clamp(r, lo, hi);
  }
  bool inside(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double d2 = dy * dy + dx * dx;
    if (d2 > hi * hi) return false;
    const double r = radius(std::atan2(dy, dx));
    return d2 <= r * r;
  }
};

void paint_background(RgbImage& image, Rng& rng) {
  // Low-frequency stain variation plus per-pixel grain.
  const double fy = uniform(rng, 0.01, 0.03), fx = uniform(rng, 0.01, 0.03);
  const double py = uniform(rng, 0, 2 * kPi), px = uniform(rng, 0, 2 * kPi);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double wave = 6.0 * std::sin(fy * y + py) * std::cos(fx * x + px);
      image.set(y, x, jitter(kStroma, wave + uniform(rng, -10.0, 10.0)));
    }
  }
}

}  // namespace

std::string_view to_string(MotifClass motif) {
  switch (motif) {
    case MotifClass::tumor_blob: return "tumor_blob";
    case MotifClass::lymphocyte_dot: return "lymphocyte_dot";
    case MotifClass::collagen_stripe: return "collagen_stripe";
    case MotifClass::lumen_hole: return "lumen_hole";
    case MotifClass::background: return "background";
  }
  return "unknown";
}

MotifClass parse_motif(std::string_view name) {
  for (auto m : {MotifClass::tumor_blob, MotifClass::lymphocyte_dot, MotifClass::collagen_stripe,
                 MotifClass::lumen_hole, MotifClass::background}) {
    if (to_string(m) == name) return m;
  }
  throw Error("parse_error", "unknown motif class '" + std::string(name) + "'");
}

const MotifRecipe& SceneSpec::recipe(MotifClass motif) const {
  switch (motif) {
    case MotifClass::tumor_blob: return tumor;
    case MotifClass::lymphocyte_dot: return lymphocyte;
    case MotifClass::collagen_stripe: return collagen;
    case MotifClass::lumen_hole: return lumen;
    case MotifClass::background: break;
  }
  throw Error("invalid_spec", "background has no recipe");
}

MotifRecipe& SceneSpec::recipe(MotifClass motif) {
  return const_cast<MotifRecipe&>(static_cast<const SceneSpec&>(*this).recipe(motif));
}

void SceneSpec::validate(int min_extent) const {
  if (width < min_extent || height < min_extent || width < 1 || height < 1) {
    throw Error("invalid_spec", "scene " + std::to_string(width) + "x" + std::to_string(height) +
                                    " cannot hold a " + std::to_string(min_extent) + " pixel patch");
  }
  for (auto m : kPlantedMotifs) {
    const auto& r = recipe(m);
    if (r.count < 0) throw Error("invalid_spec", std::string(to_string(m)) + " count < 0");
    if (!(r.min_size > 0.0) || r.max_size < r.min_size) {
      throw Error("invalid_spec", std::string(to_string(m)) + " needs 0 < min_size <= max_size");
    }
  }
  if (max_attempts < 1) throw Error("invalid_spec", "max_attempts must be >= 1");
}

AnnotatedScene generate_scene(const SceneSpec& spec, int scene_id) {
  spec.validate();
  AnnotatedScene scene;
  scene.id = scene_id;
  scene.image = RgbImage(spec.width, spec.height, kStroma);
  scene.mask = GrayImage(spec.width, spec.height, 0);
  Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(scene_id)));
  paint_background(scene.image, rng);

  auto fail = [&](MotifClass m) {
    return Error("placement_failed", "could not place " + std::string(to_string(m)) + " in scene " +
                                         std::to_string(scene_id) + " within " +
                                         std::to_string(spec.max_attempts) + " attempts");
  };

  // Tumor footprints are placed first so other motifs can avoid them.
  std::vector<BlobShape> blobs;
  for (int i = 0; i < spec.tumor.count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_attempts && !placed; ++attempt) {
      BlobShape b{};
      b.lo = spec.tumor.min_size;
      b.hi = spec.tumor.max_size;
      b.base = uniform(rng, b.lo, b.hi);
      b.a3 = uniform(rng, 0.0, 0.15);
      b.p3 = uniform(rng, 0.0, 2 * kPi);
      b.a5 = uniform(rng, 0.0, 0.08);
      b.p5 = uniform(rng, 0.0, 2 * kPi);
      const double reach = std::min(b.hi, b.base * (1.0 + b.a3 + b.a5)) + 3.0;
      if (2 * reach >= spec.width || 2 * reach >= spec.height) break;
      b.cy = uniform(rng, reach, spec.height - reach);
      b.cx = uniform(rng, reach, spec.width - reach);
      bool clear = true;
      for (const auto& o : blobs) {
        const double oreach = std::min(o.hi, o.base * (1.0 + o.a3 + o.a5)) + 3.0;
        if (std::hypot(b.cy - o.cy, b.cx - o.cx) < reach + oreach) clear = false;
      }
      if (!clear) continue;
      blobs.push_back(b);
      placed = true;
    }
    if (!placed) throw fail(MotifClass::tumor_blob);
  }
  auto near_tumor = [&](double cy, double cx, double margin) {
    for (const auto& b : blobs) {
      const double reach = std::min(b.hi, b.base * (1.0 + b.a3 + b.a5));
      if (std::hypot(cy - b.cy, cx - b.cx) < reach + margin) return true;
    }
    return false;
  };

  // Collagen: wavy pale bands with a darker fiber line.
  for (int i = 0; i < spec.collagen.count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_attempts && !placed; ++attempt) {
      const double half = uniform(rng, spec.collagen.min_size, spec.collagen.max_size);
      const double thick = uniform(rng, 2.5, 4.5);
      const double margin = half + 12.0;
      if (2 * margin >= spec.width || 2 * margin >= spec.height) break;
      const double cy = uniform(rng, margin, spec.height - margin);
      const double cx = uniform(rng, margin, spec.width - margin);
      if (near_tumor(cy, cx, half + 8.0)) continue;
      const double theta = uniform(rng, 0.0, kPi);
      const double amp = uniform(rng, 2.0, 6.0);
      const double wavelength = uniform(rng, 20.0, 40.0);
      const double phase = uniform(rng, 0.0, 2 * kPi);
      const double uy = std::sin(theta), ux = std::cos(theta);
      Canvas canvas{scene.image};
      for (double t = -half; t <= half; t += 0.5) {
        const double off = amp * std::sin(2 * kPi * t / wavelength + phase);
        const double y = cy + t * uy + off * ux;
        const double x = cx + t * ux - off * uy;
        disc(canvas, y, x, thick, kCollagen, rng, 4.0);
      }
      for (double t = -half; t <= half; t += 0.5) {
        const double off = amp * std::sin(2 * kPi * t / wavelength + phase);
        canvas.paint(static_cast<int>(std::lround(cy + t * uy + off * ux)),
                     static_cast<int>(std::lround(cx + t * ux - off * uy)), kCollagenFiber);
      }
      scene.inventory.push_back({MotifClass::collagen_stripe, canvas.extent(), cy, cx, half});
      placed = true;
    }
    if (!placed) throw fail(MotifClass::collagen_stripe);
  }

  // Lumen: white ellipses with a thin rim.
  for (int i = 0; i < spec.lumen.count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_attempts && !placed; ++attempt) {
      const double a = uniform(rng, spec.lumen.min_size, spec.lumen.max_size);
      const double b = a * uniform(rng, 0.5, 0.9);
      const double margin = a + 3.0;
      if (2 * margin >= spec.width || 2 * margin >= spec.height) break;
      const double cy = uniform(rng, margin, spec.height - margin);
      const double cx = uniform(rng, margin, spec.width - margin);
      if (near_tumor(cy, cx, a + 6.0)) continue;
      const double theta = uniform(rng, 0.0, kPi);
      const double c = std::cos(theta), s = std::sin(theta);
      Canvas canvas{scene.image};
      const int r = static_cast<int>(std::ceil(a + 2.0));
      for (int y = static_cast<int>(cy) - r; y <= static_cast<int>(cy) + r; ++y) {
        for (int x = static_cast<int>(cx) - r; x <= static_cast<int>(cx) + r; ++x) {
          const double dy = y - cy, dx = x - cx;
          const double u = (dx * c + dy * s) / a;
          const double v = (-dx * s + dy * c) / b;
          const double q = u * u + v * v;
          if (q <= 1.0) {
            canvas.paint(y, x, jitter(kLumen, uniform(rng, -3.0, 3.0)));
          } else if (q <= 1.35) {
            canvas.paint(y, x, jitter(kLumenRim, uniform(rng, -6.0, 6.0)));
          }
        }
      }
      scene.inventory.push_back({MotifClass::lumen_hole, canvas.extent(), cy, cx, a});
      placed = true;
    }
    if (!placed) throw fail(MotifClass::lumen_hole);
  }

  // Tumor blobs: purple cytoplasm packed with dark nuclei, each ringed by a
  // pale halo.
  for (const auto& b : blobs) {
    Canvas canvas{scene.image};
    const int r = static_cast<int>(std::ceil(b.hi)) + 1;
    for (int y = static_cast<int>(b.cy) - r; y <= static_cast<int>(b.cy) + r; ++y) {
      for (int x = static_cast<int>(b.cx) - r; x <= static_cast<int>(b.cx) + r; ++x) {
        if (!scene.image.contains(y, x) || !b.inside(y, x)) continue;
        canvas.paint(y, x, jitter(kCytoplasm, uniform(rng, -8.0, 8.0)));
        scene.mask.at(y, x) = 1;
      }
    }
    const double spacing = 11.0;
    for (double gy = b.cy - b.hi; gy <= b.cy + b.hi; gy += spacing) {
      for (double gx = b.cx - b.hi; gx <= b.cx + b.hi; gx += spacing) {
        const double ny = gy + uniform(rng, -2.5, 2.5);
        const double nx = gx + uniform(rng, -2.5, 2.5);
        const double nr = uniform(rng, 3.0, 4.5);
        if (!b.inside(ny, nx)) continue;
        // Halo and nucleus stay inside the lesion footprint.
        Canvas inner{scene.image};
        const int hr = static_cast<int>(std::ceil(nr + 2.0));
        for (int y = static_cast<int>(ny) - hr; y <= static_cast<int>(ny) + hr; ++y) {
          for (int x = static_cast<int>(nx) - hr; x <= static_cast<int>(nx) + hr; ++x) {
            if (!scene.image.contains(y, x) || scene.mask.at(y, x) == 0) continue;
            const double d = std::hypot(y - ny, x - nx);
            if (d <= nr) {
              inner.paint(y, x, jitter(kNucleus, uniform(rng, -10.0, 10.0)));
            } else if (d <= nr + 2.0) {
              inner.paint(y, x, jitter(kHalo, uniform(rng, -5.0, 5.0)));
            }
          }
        }
      }
    }
    scene.inventory.push_back({MotifClass::tumor_blob, canvas.extent(), b.cy, b.cx, b.base});
  }

  // Lymphocytes: small dark-blue discs in the stroma.
  for (int i = 0; i < spec.lymphocyte.count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_attempts && !placed; ++attempt) {
      const double r = uniform(rng, spec.lymphocyte.min_size, spec.lymphocyte.max_size);
      const double margin = r + 1.0;
      if (2 * margin >= spec.width || 2 * margin >= spec.height) break;
      const double cy = uniform(rng, margin, spec.height - margin);
      const double cx = uniform(rng, margin, spec.width - margin);
      if (near_tumor(cy, cx, r + 4.0)) continue;
      Canvas canvas{scene.image};
      disc(canvas, cy, cx, r, kLymphocyte, rng, 8.0);
      scene.inventory.push_back({MotifClass::lymphocyte_dot, canvas.extent(), cy, cx, r});
      placed = true;
    }
    if (!placed) throw fail(MotifClass::lymphocyte_dot);
  }
  return scene;
}

bool contains_motif(const PlantedMotif& motif, const Box& patch) {
  switch (motif.kind) {
    case MotifClass::lymphocyte_dot:
      return patch.contains(motif.cy, motif.cx);
    case MotifClass::tumor_blob:
    case MotifClass::collagen_stripe:
    case MotifClass::lumen_hole:
      return patch.intersects(motif.box);
    case MotifClass::background:
      return false;
  }
  return false;
}

}  // namespace activscope::synth
