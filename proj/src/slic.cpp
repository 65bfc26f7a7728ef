#include "bandsel/slic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

namespace bandsel::slic {

namespace fs = std::filesystem;
using raster::MultibandRaster;

void SlicConfig::validate() const {
  if (k < 1) throw InvalidArgument("slic: k must be >= 1");
  if (!(m > 0.0)) throw InvalidArgument("slic: compactness m must be > 0");
  if (max_iter < 1) throw InvalidArgument("slic: max_iter must be >= 1");
  if (!(min_region_frac > 0.0 && min_region_frac < 1.0)) {
    throw InvalidArgument("slic: min_region_frac must lie in (0, 1)");
  }
}

int default_k(std::size_t pixel_count, double px_per_segment) {
  return std::max(1, static_cast<int>(std::lround(static_cast<double>(pixel_count) / px_per_segment)));
}

std::vector<std::size_t> SuperpixelMap::areas() const {
  std::vector<std::size_t> a(static_cast<std::size_t>(n_segments), 0);
  for (auto l : labels) ++a[l];
  return a;
}

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

struct Center {
  double l, a, b, x, y;
};

struct Window {
  int x0, x1, y0, y1;
};

Window window_of(const Center& c, double s, int width, int height) {
  return {std::max(0, static_cast<int>(std::ceil(c.x - s))),
          std::min(width - 1, static_cast<int>(std::floor(c.x + s))),
          std::max(0, static_cast<int>(std::ceil(c.y - s))),
          std::min(height - 1, static_cast<int>(std::floor(c.y + s)))};
}

std::vector<double> sobel_magnitude(std::span<const float> plane, int w, int h) {
  auto px = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return static_cast<double>(plane[static_cast<std::size_t>(y) * w + x]);
  };
  std::vector<double> g(plane.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1) -
                        px(x - 1, y - 1) - 2 * px(x - 1, y) - px(x - 1, y + 1);
      const double gy = px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1) -
                        px(x - 1, y - 1) - 2 * px(x, y - 1) - px(x + 1, y - 1);
      g[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return g;
}

std::vector<Center> seed_centers(const MultibandRaster& lab, double s) {
  const int w = lab.width(), h = lab.height();
  const auto lp = lab.band(0), ap = lab.band(1), bp = lab.band(2);
  const auto grad = sobel_magnitude(lp, w, h);
  const int nx = std::max(1, static_cast<int>(std::lround(w / s)));
  const int ny = std::max(1, static_cast<int>(std::lround(h / s)));
  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int gx = std::min(w - 1, static_cast<int>((i + 0.5) * w / nx));
      const int gy = std::min(h - 1, static_cast<int>((j + 0.5) * h / ny));
      int bx = gx, by = gy;
      double best = grad[static_cast<std::size_t>(gy) * w + gx];
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = gx + dx, y = gy + dy;
          if (x < 0 || y < 0 || x >= w || y >= h) continue;
          const double g = grad[static_cast<std::size_t>(y) * w + x];
          if (g < best) {
            best = g;
            bx = x;
            by = y;
          }
        }
      }
      const std::size_t p = static_cast<std::size_t>(by) * w + bx;
      centers.push_back({lp[p], ap[p], bp[p], static_cast<double>(bx), static_cast<double>(by)});
    }
  }
  return centers;
}

struct AssignState {
  std::vector<double> dist;
  std::vector<std::int32_t> label;
};

inline void consider(AssignState& st, std::size_t p, std::int32_t c, const Center& ctr, double l,
                     double a, double b, int x, int y, double spatial_weight) {
  const double dl = l - ctr.l, da = a - ctr.a, db = b - ctr.b;
  const double dx = x - ctr.x, dy = y - ctr.y;
  const double d = dl * dl + da * da + db * db + spatial_weight * (dx * dx + dy * dy);
  if (d < st.dist[p]) {
    st.dist[p] = d;
    st.label[p] = c;
  }
}

// Center-centric sweep, the classic formulation.
void assign_serial(const MultibandRaster& lab, const std::vector<Center>& centers, double s,
                   double spatial_weight, AssignState& st) {
  const int w = lab.width(), h = lab.height();
  const auto lp = lab.band(0), ap = lab.band(1), bp = lab.band(2);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const Window win = window_of(centers[c], s, w, h);
    for (int y = win.y0; y <= win.y1; ++y) {
      for (int x = win.x0; x <= win.x1; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        consider(st, p, static_cast<std::int32_t>(c), centers[c], lp[p], ap[p], bp[p], x, y,
                 spatial_weight);
      }
    }
  }
}

// Row-parallel sweep. Each pixel sees its candidate centers in ascending
// index order, the same order as the serial sweep, so ties resolve
// identically.
void assign_parallel(const MultibandRaster& lab, const std::vector<Center>& centers, double s,
                     double spatial_weight, AssignState& st) {
  const int w = lab.width(), h = lab.height();
  const auto lp = lab.band(0), ap = lab.band(1), bp = lab.band(2);
  std::vector<Window> windows(centers.size());
  std::vector<std::vector<std::int32_t>> rows(static_cast<std::size_t>(h));
  for (std::size_t c = 0; c < centers.size(); ++c) {
    windows[c] = window_of(centers[c], s, w, h);
    for (int y = windows[c].y0; y <= windows[c].y1; ++y) {
      rows[static_cast<std::size_t>(y)].push_back(static_cast<std::int32_t>(c));
    }
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (std::int32_t c : rows[static_cast<std::size_t>(y)]) {
      const Window& win = windows[static_cast<std::size_t>(c)];
      const Center& ctr = centers[static_cast<std::size_t>(c)];
      for (int x = win.x0; x <= win.x1; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        consider(st, p, c, ctr, lp[p], ap[p], bp[p], x, y, spatial_weight);
      }
    }
  }
}

}  // namespace

MultibandRaster to_lab(const MultibandRaster& rgb) {
  if (rgb.bands() != 3) {
    throw InvalidArgument("to_lab expects 3 bands, got " + std::to_string(rgb.bands()));
  }
  constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
  const std::size_t n = rgb.pixel_count();
  const auto rp = rgb.band(0), gp = rgb.band(1), bp = rgb.band(2);
  std::vector<float> out(3 * n);
  for (std::size_t p = 0; p < n; ++p) {
    const double r = srgb_to_linear(std::clamp<double>(rp[p], 0.0, 1.0));
    const double g = srgb_to_linear(std::clamp<double>(gp[p], 0.0, 1.0));
    const double b = srgb_to_linear(std::clamp<double>(bp[p], 0.0, 1.0));
    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(x / xn), fy = lab_f(y / yn), fz = lab_f(z / zn);
    out[p] = static_cast<float>(116.0 * fy - 16.0);
    out[n + p] = static_cast<float>(500.0 * (fx - fy));
    out[2 * n + p] = static_cast<float>(200.0 * (fy - fz));
  }
  return MultibandRaster(rgb.width(), rgb.height(), {"L", "a", "b"}, std::move(out));
}

SuperpixelMap slic_cluster(const MultibandRaster& lab, const SlicConfig& cfg, Execution exec) {
  cfg.validate();
  if (lab.bands() != 3) throw InvalidArgument("slic expects a 3-band Lab raster");
  const int w = lab.width(), h = lab.height();
  const std::size_t n = lab.pixel_count();
  if (static_cast<std::size_t>(cfg.k) > n) {
    throw InvalidArgument("slic: k = " + std::to_string(cfg.k) + " exceeds pixel count " +
                          std::to_string(n));
  }
  const double s = std::sqrt(static_cast<double>(n) / cfg.k);
  const double spatial_weight = (cfg.m / s) * (cfg.m / s);
  auto centers = seed_centers(lab, s);
  const auto lp = lab.band(0), ap = lab.band(1), bp = lab.band(2);

  AssignState st;
  st.label.assign(n, -1);
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    st.dist.assign(n, std::numeric_limits<double>::infinity());
    if (exec == Execution::parallel) {
      assign_parallel(lab, centers, s, spatial_weight, st);
    } else {
      assign_serial(lab, centers, s, spatial_weight, st);
    }
    // Pixels outside every window keep their previous label; on the first
    // pass they fall back to the spatially nearest center.
    for (std::size_t p = 0; p < n; ++p) {
      if (st.label[p] >= 0) continue;
      const double x = static_cast<double>(p % w), y = static_cast<double>(p / w);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = (x - centers[c].x) * (x - centers[c].x) + (y - centers[c].y) * (y - centers[c].y);
        if (d < best) {
          best = d;
          st.label[p] = static_cast<std::int32_t>(c);
        }
      }
    }

    std::vector<Center> sums(centers.size(), Center{0, 0, 0, 0, 0});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto c = static_cast<std::size_t>(st.label[p]);
      sums[c].l += lp[p];
      sums[c].a += ap[p];
      sums[c].b += bp[p];
      sums[c].x += static_cast<double>(p % w);
      sums[c].y += static_cast<double>(p / w);
      ++counts[c];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      const Center next{sums[c].l * inv, sums[c].a * inv, sums[c].b * inv, sums[c].x * inv,
                        sums[c].y * inv};
      movement = std::max(movement, std::hypot(next.x - centers[c].x, next.y - centers[c].y));
      centers[c] = next;
    }
    if (movement < 1e-3 * s) break;
  }

  SuperpixelMap out;
  out.width = w;
  out.height = h;
  out.n_segments = static_cast<int>(centers.size());
  out.labels.assign(st.label.begin(), st.label.end());
  return out;
}

SuperpixelMap slic_segment(const MultibandRaster& lab, const SlicConfig& cfg, Execution exec) {
  return enforce_connectivity(slic_cluster(lab, cfg, exec), cfg);
}

SuperpixelMap enforce_connectivity(const SuperpixelMap& map, const SlicConfig& cfg) {
  cfg.validate();
  const int w = map.width, h = map.height;
  const std::size_t n = map.labels.size();
  constexpr std::int32_t unset = -1;

  // 4-connected components in scan order.
  std::vector<std::int32_t> comp(n, unset);
  std::vector<std::size_t> size;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] != unset) continue;
    const auto id = static_cast<std::int32_t>(size.size());
    const auto lbl = map.labels[start];
    std::size_t count = 0;
    comp[start] = id;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      ++count;
      const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
      const std::size_t nbrs[4] = {x > 0 ? p - 1 : n, x + 1 < w ? p + 1 : n,
                                   y > 0 ? p - w : n, y + 1 < h ? p + w : n};
      for (std::size_t q : nbrs) {
        if (q < n && comp[q] == unset && map.labels[q] == lbl) {
          comp[q] = id;
          queue.push_back(q);
        }
      }
    }
    size.push_back(count);
  }

  const std::size_t nc = size.size();
  std::vector<std::set<std::int32_t>> adj(nc);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (x + 1 < w && comp[p] != comp[p + 1]) {
        adj[static_cast<std::size_t>(comp[p])].insert(comp[p + 1]);
        adj[static_cast<std::size_t>(comp[p + 1])].insert(comp[p]);
      }
      if (y + 1 < h && comp[p] != comp[p + w]) {
        adj[static_cast<std::size_t>(comp[p])].insert(comp[p + w]);
        adj[static_cast<std::size_t>(comp[p + w])].insert(comp[p]);
      }
    }
  }

  std::vector<std::int32_t> parent(nc);
  for (std::size_t c = 0; c < nc; ++c) parent[c] = static_cast<std::int32_t>(c);
  auto find = [&](std::int32_t c) {
    while (parent[static_cast<std::size_t>(c)] != c) {
      parent[static_cast<std::size_t>(c)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(c)])];
      c = parent[static_cast<std::size_t>(c)];
    }
    return c;
  };

  const double threshold = cfg.min_region_frac * static_cast<double>(n) / cfg.k;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t c = 0; c < nc; ++c) {
      const auto ci = static_cast<std::int32_t>(c);
      if (find(ci) != ci || static_cast<double>(size[c]) >= threshold) continue;
      std::int32_t target = unset;
      for (std::int32_t nb : adj[c]) {
        const std::int32_t r = find(nb);
        if (r == ci) continue;
        const auto rs = size[static_cast<std::size_t>(r)];
        if (target == unset || rs > size[static_cast<std::size_t>(target)] ||
            (rs == size[static_cast<std::size_t>(target)] && r < target)) {
          target = r;
        }
      }
      if (target == unset) continue;
      const auto t = static_cast<std::size_t>(target);
      parent[c] = target;
      size[t] += size[c];
      adj[t].insert(adj[c].begin(), adj[c].end());
      adj[c].clear();
      changed = true;
    }
  }

  SuperpixelMap out;
  out.width = w;
  out.height = h;
  out.labels.resize(n);
  std::vector<std::int32_t> relabel(nc, unset);
  std::uint32_t next = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const auto r = static_cast<std::size_t>(find(comp[p]));
    if (relabel[r] == unset) relabel[r] = static_cast<std::int32_t>(next++);
    out.labels[p] = static_cast<std::uint32_t>(relabel[r]);
  }
  out.n_segments = static_cast<int>(next);
  return out;
}

void save_superpixels(const SuperpixelMap& map, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json meta = {{"width", map.width}, {"height", map.height}, {"n_segments", map.n_segments}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
  std::vector<unsigned char> bytes(map.labels.size() * 4);
  for (std::size_t i = 0; i < map.labels.size(); ++i) {
    for (int k = 0; k < 4; ++k) bytes[4 * i + k] = static_cast<unsigned char>(map.labels[i] >> (8 * k));
  }
  std::ofstream out(dir / "labels.u32", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "labels.u32").string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

SuperpixelMap load_superpixels(const fs::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw IoError("missing " + (dir / "meta.json").string());
  SuperpixelMap map;
  try {
    const auto meta = nlohmann::json::parse(meta_in);
    map.width = meta.at("width").get<int>();
    map.height = meta.at("height").get<int>();
    map.n_segments = meta.at("n_segments").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "meta.json").string() + ": " + e.what());
  }
  const std::size_t n = static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height);
  std::ifstream in(dir / "labels.u32", std::ios::binary);
  if (!in) throw IoError("missing " + (dir / "labels.u32").string());
  std::vector<unsigned char> bytes(4 * n);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw FormatError((dir / "labels.u32").string() + ": truncated at byte " + std::to_string(in.gcount()));
  }
  map.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    map.labels[i] = static_cast<std::uint32_t>(bytes[4 * i]) | static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8 |
                    static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16 |
                    static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24;
    if (map.labels[i] >= static_cast<std::uint32_t>(map.n_segments)) {
      throw FormatError((dir / "labels.u32").string() + ": label out of range at offset " +
                        std::to_string(4 * i));
    }
  }
  return map;
}

}  // namespace bandsel::slic
