#include "ftqcr/arch.hpp"

#include <algorithm>
#include <deque>
#include <random>

#include <nlohmann/json.hpp>

#include "ftqcr/errors.hpp"
#include "ftqcr/parallel.hpp"

namespace ftqcr::arch {

using nlohmann::json;

LayoutKind layout_from_string(const std::string& s) {
    if (s == "sparse") return LayoutKind::sparse;
    if (s == "patched") return LayoutKind::patched;
    if (s == "dense") return LayoutKind::dense;
    throw ConfigError("unknown layout '" + s + "' (expected sparse|patched|dense)");
}

std::string to_string(LayoutKind k) {
    switch (k) {
        case LayoutKind::sparse: return "sparse";
        case LayoutKind::patched: return "patched";
        case LayoutKind::dense: return "dense";
    }
    return "?";
}

Layout Layout::make(LayoutKind kind) {
    Layout l;
    l.kind = kind;
    return l;
}

DefectMap DefectMap::sample(int rows, int cols, double eps, std::uint64_t seed) {
    DefectMap m;
    m.rows = rows;
    m.cols = cols;
    m.seed = seed;
    m.eps_defect = eps;
    m.defective.assign(static_cast<size_t>(rows) * cols, 0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& d : m.defective) d = (u(rng) < eps) ? 1 : 0;
    return m;
}

namespace {

// fixed expansion order keeps paths deterministic
constexpr int kDr[4] = {-1, 0, 1, 0};
constexpr int kDc[4] = {0, 1, 0, -1};

// nearest non-defective dot by BFS over the full grid (ties: first found)
Node remap_endpoint(const DefectMap& d, Node n) {
    if (!d.is_defective(n)) return n;
    std::vector<std::uint8_t> seen(static_cast<size_t>(d.rows) * d.cols, 0);
    std::deque<Node> queue{n};
    seen[static_cast<size_t>(n.r * d.cols + n.c)] = 1;
    while (!queue.empty()) {
        const Node cur = queue.front();
        queue.pop_front();
        if (!d.is_defective(cur)) return cur;
        for (int k = 0; k < 4; ++k) {
            const Node next{cur.r + kDr[k], cur.c + kDc[k]};
            if (!d.in_grid(next)) continue;
            auto& s = seen[static_cast<size_t>(next.r * d.cols + next.c)];
            if (!s) {
                s = 1;
                queue.push_back(next);
            }
        }
    }
    throw ModelError("defect map has no functional dot left");
}

int count_corners(const std::vector<Node>& path) {
    int corners = 0;
    for (size_t i = 2; i < path.size(); ++i) {
        const int dr1 = path[i - 1].r - path[i - 2].r;
        const int dc1 = path[i - 1].c - path[i - 2].c;
        const int dr2 = path[i].r - path[i - 1].r;
        const int dc2 = path[i].c - path[i - 1].c;
        if (dr1 != dr2 || dc1 != dc2) ++corners;
    }
    return corners;
}

}  // namespace

Route route(const DefectMap& defects, Node src, Node dst, const params::HardwareParams& hp) {
    if (!defects.in_grid(src) || !defects.in_grid(dst))
        throw ConfigError("route endpoints outside the grid");
    src = remap_endpoint(defects, src);
    dst = remap_endpoint(defects, dst);

    const size_t n = static_cast<size_t>(defects.rows) * defects.cols;
    std::vector<int> parent(n, -2);
    auto id = [&](Node v) { return static_cast<size_t>(v.r * defects.cols + v.c); };
    std::deque<Node> queue{src};
    parent[id(src)] = -1;
    bool found = (src == dst);
    while (!queue.empty() && !found) {
        const Node cur = queue.front();
        queue.pop_front();
        for (int k = 0; k < 4; ++k) {
            const Node next{cur.r + kDr[k], cur.c + kDc[k]};
            if (!defects.in_grid(next) || defects.is_defective(next)) continue;
            if (parent[id(next)] != -2) continue;
            parent[id(next)] = static_cast<int>(id(cur));
            if (next == dst) {
                found = true;
                break;
            }
            queue.push_back(next);
        }
    }
    if (!found && !(src == dst))
        throw ModelError("no defect-free shuttling path between the requested dots");

    Route r;
    r.src = src;
    r.dst = dst;
    Node cur = dst;
    r.path.push_back(cur);
    while (!(cur == src)) {
        const int p = parent[id(cur)];
        cur = Node{p / defects.cols, p % defects.cols};
        r.path.push_back(cur);
    }
    std::reverse(r.path.begin(), r.path.end());
    r.hops = static_cast<int>(r.path.size()) - 1;
    r.corners = count_corners(r.path);
    r.duration = r.hops * hp.t_step();
    return r;
}

ShuttleStats shuttle_stats(double eps_defect, int rows, int cols, int trials,
                           std::uint64_t seed, const params::HardwareParams& hp) {
    if (trials < 1) throw ConfigError("shuttle_stats needs at least one trial");
    struct TrialOut {
        double extra_hops = 0, added_error = 0, hops = 0;
        int disconnected = 0;
    };
    std::vector<TrialOut> out(static_cast<size_t>(trials));
    par::parallel_for(static_cast<size_t>(trials), [&](size_t t) {
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * (t + 1)));
        std::uniform_int_distribution<int> rr(0, rows - 1), cc(0, cols - 1);
        const DefectMap defects = DefectMap::sample(rows, cols, eps_defect, rng());
        Node src{rr(rng), cc(rng)}, dst{rr(rng), cc(rng)};
        while (src == dst) dst = Node{rr(rng), cc(rng)};
        const int manhattan = std::abs(src.r - dst.r) + std::abs(src.c - dst.c);
        try {
            const Route r = route(defects, src, dst, hp);
            out[t].hops = r.hops;
            out[t].extra_hops = r.hops - manhattan;
            out[t].added_error =
                1.0 - std::pow(1.0 - hp.eps_shuttle_per_dot, r.hops) *
                          std::pow(1.0 - std::min(1.0, hp.corner_factor * hp.eps_shuttle_per_dot),
                                   r.corners);
        } catch (const ModelError&) {
            out[t].disconnected = 1;
        }
    });
    ShuttleStats s;
    s.trials = trials;
    int ok = 0;
    for (const auto& o : out) {
        if (o.disconnected) {
            ++s.disconnected;
            continue;
        }
        ++ok;
        s.mean_extra_hops += o.extra_hops;
        s.mean_added_error += o.added_error;
        s.mean_hops += o.hops;
    }
    if (ok > 0) {
        s.mean_extra_hops /= ok;
        s.mean_added_error /= ok;
        s.mean_hops /= ok;
    }
    return s;
}

OpKind op_kind_from_string(const std::string& s) {
    if (s == "gate1") return OpKind::gate1;
    if (s == "gate2") return OpKind::gate2;
    if (s == "readout") return OpKind::readout;
    if (s == "init") return OpKind::init;
    if (s == "lane_shuttle") return OpKind::lane_shuttle;
    if (s == "stabilizer_cycle") return OpKind::stabilizer_cycle;
    throw ConfigError("unknown architecture op '" + s + "'");
}

double LatencyModel::gate1() const {
    return mode == noise::OpMode::pulse && t_gate1_pulse > 0 ? t_gate1_pulse : hp.t_gate1;
}

double LatencyModel::gate2() const {
    return mode == noise::OpMode::pulse && t_gate2_pulse > 0 ? t_gate2_pulse : hp.t_gate2;
}

double op_latency(const Layout& layout, OpKind kind, const LatencyModel& lm) {
    const auto& hp = lm.hp;
    const double lane = hp.t_lane();
    const bool sparse = layout.kind == LayoutKind::sparse;
    switch (kind) {
        case OpKind::gate1:
            return lm.gate1();
        case OpKind::gate2:
            // sparse: shuttle to the interaction site and back
            return lm.gate2() + (sparse ? 2.0 * lane : 0.0);
        case OpKind::readout:
            return hp.t_readout + (sparse ? lane : 0.0);
        case OpKind::init:
            return hp.t_init;
        case OpKind::lane_shuttle:
            return lane;
        case OpKind::stabilizer_cycle: {
            // init (parallel) + CNOT layers + readout; basis changes are
            // absorbed into the layer time
            double layers = 0.0;
            if (lm.mode == noise::OpMode::pulse && lm.t_check_segment > 0 && !sparse) {
                layers = lm.check_segments_per_cycle * lm.t_check_segment;
                if (layout.kind == LayoutKind::patched) layers += 0.0;  // intra-patch
            } else {
                layers = lm.cnot_layers * (lm.gate2() + (sparse ? 2.0 * lane : 0.0));
            }
            const double ro = hp.t_readout + (sparse ? lane : 0.0);
            return hp.t_init + layers + ro;
        }
    }
    return 0.0;
}

double defect_detour_factor(const params::HardwareParams& hp, std::uint64_t seed) {
    if (hp.eps_defect <= 0.0) return 1.0;
    const auto stats = shuttle_stats(hp.eps_defect, 20, 20, 2000, seed, hp);
    if (stats.mean_hops <= 0.0) return 1.0;
    return 1.0 + std::max(0.0, stats.mean_extra_hops) / stats.mean_hops;
}

json Route::to_json() const {
    json path_json = json::array();
    for (const auto& n : path) path_json.push_back({n.r, n.c});
    return json{{"hops", hops},     {"corners", corners}, {"duration", duration},
                {"src", {src.r, src.c}}, {"dst", {dst.r, dst.c}}, {"path", path_json}};
}

json to_json(const Layout& l) {
    return json{{"kind", to_string(l.kind)},
                {"rows", l.rows},
                {"cols", l.cols},
                {"logical_per_patch", l.logical_per_patch}};
}

}  // namespace ftqcr::arch
