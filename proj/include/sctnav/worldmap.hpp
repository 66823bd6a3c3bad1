// Occupancy-grid environment: map loading, inflated collision queries,
// free-space sampling, plan collision checks and grid geodesics.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sctnav/errors.hpp"
#include "sctnav/geometry.hpp"
#include "sctnav/kinematics.hpp"

namespace sctnav {

enum class CellState : std::uint8_t { Free, Occupied, Unknown };

struct CellIndex {
    int i = 0;  // column, +x
    int j = 0;  // row, +y (row 0 is the bottom of the map)

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Clearance of the LoCoBot body used when planning.
inline constexpr double kDefaultInflationRadius = 0.18;
inline constexpr double kDefaultSampleSpacing = 0.05;

/// Immutable 2D occupancy raster. Unknown cells count as occupied. A cell
/// is free only if no occupied cell centre lies within
/// inflation_radius + resolution / 2 of its own centre.
class OccupancyGrid {
  public:
    OccupancyGrid(double resolution, Point2 origin, int width, int height, std::vector<CellState> cells,
                  double inflation_radius = 0.0)
        : resolution_(resolution),
          origin_(origin),
          width_(width),
          height_(height),
          inflation_radius_(inflation_radius),
          cells_(std::move(cells)) {
        if (!(resolution_ > 0.0) || !std::isfinite(resolution_)) {
            throw InvalidInput("OccupancyGrid: resolution must be > 0");
        }
        if (width_ <= 0 || height_ <= 0) {
            throw InvalidInput("OccupancyGrid: empty grid");
        }
        if (cells_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
            throw InvalidInput("OccupancyGrid: cell count does not match dimensions");
        }
        if (!(inflation_radius_ >= 0.0)) {
            throw InvalidInput("OccupancyGrid: inflation radius must be >= 0");
        }
        inflate();
    }

    [[nodiscard]] OccupancyGrid with_inflation(double radius) const {
        return OccupancyGrid(resolution_, origin_, width_, height_, cells_, radius);
    }

    [[nodiscard]] double resolution() const noexcept { return resolution_; }
    [[nodiscard]] Point2 origin() const noexcept { return origin_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] double inflation_radius() const noexcept { return inflation_radius_; }
    [[nodiscard]] double width_m() const noexcept { return width_ * resolution_; }
    [[nodiscard]] double height_m() const noexcept { return height_ * resolution_; }

    [[nodiscard]] bool in_bounds(CellIndex c) const noexcept {
        return c.i >= 0 && c.j >= 0 && c.i < width_ && c.j < height_;
    }
    [[nodiscard]] std::size_t flat(CellIndex c) const noexcept {
        return static_cast<std::size_t>(c.j) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.i);
    }
    [[nodiscard]] CellIndex unflat(std::size_t k) const noexcept {
        return {static_cast<int>(k % static_cast<std::size_t>(width_)),
                static_cast<int>(k / static_cast<std::size_t>(width_))};
    }

    [[nodiscard]] CellIndex cell_of(const Point2& p) const noexcept {
        return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
                static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
    }
    [[nodiscard]] Point2 cell_center(CellIndex c) const noexcept {
        return {origin_.x + (c.i + 0.5) * resolution_, origin_.y + (c.j + 0.5) * resolution_};
    }

    [[nodiscard]] CellState state(CellIndex c) const { return cells_.at(flat(c)); }
    [[nodiscard]] bool occupied(CellIndex c) const { return state(c) != CellState::Free; }
    /// Free after inflation; out-of-bounds cells are never free.
    [[nodiscard]] bool cell_free(CellIndex c) const noexcept { return in_bounds(c) && free_[flat(c)] != 0; }

    [[nodiscard]] bool is_free(double x, double y) const noexcept {
        if (!std::isfinite(x) || !std::isfinite(y)) {
            return false;
        }
        return cell_free(cell_of({x, y}));
    }
    [[nodiscard]] bool is_free(const Point2& p) const noexcept { return is_free(p.x, p.y); }

    [[nodiscard]] const std::vector<std::size_t>& free_cells() const noexcept { return free_list_; }
    [[nodiscard]] const std::vector<CellState>& cells() const noexcept { return cells_; }

  private:
    void inflate() {
        const std::size_t n = cells_.size();
        free_.assign(n, 0);
        for (std::size_t k = 0; k < n; ++k) {
            free_[k] = cells_[k] == CellState::Free ? 1 : 0;
        }
        if (inflation_radius_ > 0.0) {
            const double reach = inflation_radius_ + 0.5 * resolution_;
            const int span = static_cast<int>(std::ceil(reach / resolution_));
            std::vector<std::pair<int, int>> offsets;
            for (int dj = -span; dj <= span; ++dj) {
                for (int di = -span; di <= span; ++di) {
                    if (std::hypot(di, dj) * resolution_ < reach) {
                        offsets.emplace_back(di, dj);
                    }
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                if (cells_[k] == CellState::Free) {
                    continue;
                }
                const CellIndex c = unflat(k);
                for (auto [di, dj] : offsets) {
                    const CellIndex o{c.i + di, c.j + dj};
                    if (in_bounds(o)) {
                        free_[flat(o)] = 0;
                    }
                }
            }
        }
        free_list_.clear();
        for (std::size_t k = 0; k < n; ++k) {
            if (free_[k] != 0) {
                free_list_.push_back(k);
            }
        }
    }

    double resolution_;
    Point2 origin_;
    int width_;
    int height_;
    double inflation_radius_;
    std::vector<CellState> cells_;
    std::vector<std::uint8_t> free_;
    std::vector<std::size_t> free_list_;
};

[[nodiscard]] inline bool is_free(const OccupancyGrid& grid, double x, double y) noexcept { return grid.is_free(x, y); }

// ---------------------------------------------------------------------------
// Map I/O

namespace detail {

struct MapHeader {
    double resolution = 0.0;
    Point2 origin;
    bool has_resolution = false;
    bool has_origin = false;
};

/// Consumes `key: value` lines until a blank line or end of stream.
inline MapHeader parse_map_header(std::istream& in) {
    MapHeader h;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            break;
        }
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw InvalidInput("map header: expected 'key: value', got '" + line + "'");
        }
        const std::string key = line.substr(0, colon);
        std::istringstream value(line.substr(colon + 1));
        if (key == "resolution") {
            if (!(value >> h.resolution)) {
                throw InvalidInput("map header: bad resolution");
            }
            h.has_resolution = true;
        } else if (key == "origin") {
            if (!(value >> h.origin.x >> h.origin.y)) {
                throw InvalidInput("map header: bad origin");
            }
            h.has_origin = true;
        } else {
            throw InvalidInput("map header: unknown key '" + key + "'");
        }
    }
    if (!h.has_resolution || !h.has_origin) {
        throw InvalidInput("map header: resolution and origin are required");
    }
    if (!(h.resolution > 0.0) || !std::isfinite(h.resolution)) {
        throw InvalidInput("map header: resolution must be > 0");
    }
    return h;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Parses the ASCII map format: header lines, a blank line, then rows of
/// `.` (free), `#` (occupied) or `?` (unknown). The first row is the top of
/// the map.
[[nodiscard]] inline OccupancyGrid parse_ascii_map(const std::string& text,
                                                   double inflation_radius = kDefaultInflationRadius) {
    std::istringstream in(text);
    const detail::MapHeader header = detail::parse_map_header(in);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        rows.push_back(line);
    }
    if (rows.empty()) {
        throw InvalidInput("map: no raster rows");
    }
    const int width = static_cast<int>(rows.front().size());
    const int height = static_cast<int>(rows.size());
    std::vector<CellState> cells(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r) {
        if (static_cast<int>(rows[r].size()) != width) {
            throw InvalidInput("map: inconsistent row width at row " + std::to_string(r));
        }
        const int j = height - 1 - r;
        for (int i = 0; i < width; ++i) {
            CellState s{};
            switch (rows[r][i]) {
                case '.': s = CellState::Free; break;
                case '#': s = CellState::Occupied; break;
                case '?': s = CellState::Unknown; break;
                default: throw InvalidInput(std::string("map: unexpected cell character '") + rows[r][i] + "'");
            }
            cells[static_cast<std::size_t>(j) * width + i] = s;
        }
    }
    return OccupancyGrid(header.resolution, header.origin, width, height, std::move(cells), inflation_radius);
}

/// Parses an 8-bit binary PGM (P5) raster; pixels below 128 are occupied.
[[nodiscard]] inline OccupancyGrid parse_pgm_map(const std::string& bytes, const std::string& header_text,
                                                 double inflation_radius = kDefaultInflationRadius) {
    std::istringstream hin(header_text);
    const detail::MapHeader header = detail::parse_map_header(hin);

    std::size_t pos = 0;
    auto next_token = [&]() {
        for (;;) {
            while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            }
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
                continue;
            }
            break;
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
        }
        if (start == pos) {
            throw InvalidInput("pgm: truncated header");
        }
        return bytes.substr(start, pos - start);
    };
    if (next_token() != "P5") {
        throw InvalidInput("pgm: only binary P5 is supported");
    }
    int width = 0;
    int height = 0;
    int maxval = 0;
    try {
        width = std::stoi(next_token());
        height = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::logic_error&) {
        throw InvalidInput("pgm: malformed header");
    }
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
        throw InvalidInput("pgm: unsupported dimensions or bit depth");
    }
    ++pos;  // single whitespace before raster
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() < pos + count) {
        throw InvalidInput("pgm: raster shorter than width * height");
    }
    std::vector<CellState> cells(count);
    for (int r = 0; r < height; ++r) {
        const int j = height - 1 - r;
        for (int i = 0; i < width; ++i) {
            const auto v = static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(r) * width + i]);
            cells[static_cast<std::size_t>(j) * width + i] = v < 128 ? CellState::Occupied : CellState::Free;
        }
    }
    return OccupancyGrid(header.resolution, header.origin, width, height, std::move(cells), inflation_radius);
}

/// Loads a map file. `.pgm` files read their header from the sibling
/// `<stem>.hdr`; everything else is parsed as the ASCII format.
[[nodiscard]] inline OccupancyGrid load_map(const std::filesystem::path& path,
                                            double inflation_radius = kDefaultInflationRadius) {
    const std::string bytes = detail::read_file(path);
    if (path.extension() == ".pgm") {
        auto sidecar = path;
        sidecar.replace_extension(".hdr");
        return parse_pgm_map(bytes, detail::read_file(sidecar), inflation_radius);
    }
    if (bytes.rfind("P5", 0) == 0) {
        throw InvalidInput("map: PGM raster requires a .pgm extension and .hdr sidecar");
    }
    return parse_ascii_map(bytes, inflation_radius);
}

// ---------------------------------------------------------------------------
// Sampling and collision

/// Uniform over free cells, then uniform inside the chosen cell.
template <class Rng>
[[nodiscard]] Point2 sample_free(const OccupancyGrid& grid, Rng& rng) {
    const auto& cells = grid.free_cells();
    if (cells.empty()) {
        throw InvalidInput("sample_free: grid has no free cell");
    }
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const CellIndex c = grid.unflat(cells[pick(rng)]);
    const Point2 o = grid.origin();
    const double r = grid.resolution();
    // keep away from the far cell edge, which belongs to the neighbour
    const double u = std::min(unit(rng), 1.0 - 1e-9);
    const double v = std::min(unit(rng), 1.0 - 1e-9);
    return {o.x + (c.i + u) * r, o.y + (c.j + v) * r};
}

/// True if any pose sampled along the plan is not free. Each moving segment
/// is split into a power-of-two number of equal pieces no longer than
/// `spacing`, so a finer spacing always checks a superset of the points.
[[nodiscard]] inline bool plan_collides(const MotionPlan& plan, const OccupancyGrid& grid,
                                        double spacing = kDefaultSampleSpacing) {
    if (!(spacing > 0.0)) {
        throw InvalidInput("plan_collides: sample spacing must be > 0");
    }
    Pose pose = plan.start();
    if (!grid.is_free(pose.x, pose.y)) {
        return true;
    }
    for (const auto& seg : plan.segments()) {
        if (seg.length > 0.0) {
            std::size_t pieces = 1;
            while (seg.length / static_cast<double>(pieces) > spacing) {
                pieces *= 2;
            }
            for (std::size_t k = 1; k <= pieces; ++k) {
                const Pose p = advance(pose, seg.shape, static_cast<double>(k) / static_cast<double>(pieces));
                if (!grid.is_free(p.x, p.y)) {
                    return true;
                }
            }
        }
        pose = advance(pose, seg.shape, 1.0);
    }
    return false;
}

/// Straight-segment collision check with the same sampling rule.
[[nodiscard]] inline bool segment_collides(const OccupancyGrid& grid, const Point2& a, const Point2& b,
                                           double spacing = kDefaultSampleSpacing) {
    if (!grid.is_free(a)) {
        return true;
    }
    const double len = distance(a, b);
    std::size_t pieces = 1;
    while (len / static_cast<double>(pieces) > spacing) {
        pieces *= 2;
    }
    for (std::size_t k = 1; k <= pieces; ++k) {
        const double f = static_cast<double>(k) / static_cast<double>(pieces);
        if (!grid.is_free(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))) {
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Geodesics on the 8-connected grid

struct Polyline {
    std::vector<Point2> vertices;

    [[nodiscard]] double length() const noexcept {
        double total = 0.0;
        for (std::size_t k = 1; k < vertices.size(); ++k) {
            total += distance(vertices[k - 1], vertices[k]);
        }
        return total;
    }
};

/// Grid shortest path: the traversed cells and the polyline start, cell
/// centres..., goal whose length is the geodesic distance.
struct GridPath {
    std::vector<CellIndex> cells;
    Polyline polyline;
    std::size_t orthogonal_steps = 0;
    std::size_t diagonal_steps = 0;

    [[nodiscard]] double length() const noexcept { return polyline.length(); }
};

namespace detail {

struct Move {
    int di;
    int dj;
    double cost;  // in cells
};

inline constexpr std::array<Move, 8> kMoves{{{1, 0, 1.0},
                                              {-1, 0, 1.0},
                                              {0, 1, 1.0},
                                              {0, -1, 1.0},
                                              {1, 1, std::numbers::sqrt2},
                                              {1, -1, std::numbers::sqrt2},
                                              {-1, 1, std::numbers::sqrt2},
                                              {-1, -1, std::numbers::sqrt2}}};

/// Diagonal moves may not squeeze between two blocked orthogonal cells.
inline bool move_allowed(const OccupancyGrid& grid, CellIndex from, const Move& m) {
    const CellIndex to{from.i + m.di, from.j + m.dj};
    if (!grid.cell_free(to)) {
        return false;
    }
    if (m.di != 0 && m.dj != 0) {
        return grid.cell_free({from.i + m.di, from.j}) && grid.cell_free({from.i, from.j + m.dj});
    }
    return true;
}

inline double octile(CellIndex a, CellIndex b) {
    const double dx = std::abs(a.i - b.i);
    const double dy = std::abs(a.j - b.j);
    return std::max(dx, dy) + (std::numbers::sqrt2 - 1.0) * std::min(dx, dy);
}

inline GridPath make_grid_path(const OccupancyGrid& grid, std::vector<CellIndex> cells, const Point2& start,
                               const Point2& goal) {
    GridPath path;
    path.polyline.vertices.push_back(start);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        path.polyline.vertices.push_back(grid.cell_center(cells[k]));
        if (k > 0) {
            const bool diag = cells[k].i != cells[k - 1].i && cells[k].j != cells[k - 1].j;
            ++(diag ? path.diagonal_steps : path.orthogonal_steps);
        }
    }
    path.polyline.vertices.push_back(goal);
    path.cells = std::move(cells);
    return path;
}

}  // namespace detail

/// 8-connected A* with the octile heuristic. Throws InvalidInput if an
/// endpoint is not free and NoPath if the goal is disconnected.
[[nodiscard]] inline GridPath astar_shortest(const OccupancyGrid& grid, const Point2& start, const Point2& goal) {
    if (!grid.is_free(start) || !grid.is_free(goal)) {
        throw InvalidInput("astar_shortest: start or goal is not free");
    }
    const CellIndex s = grid.cell_of(start);
    const CellIndex g = grid.cell_of(goal);
    const std::size_t n = grid.cells().size();
    std::vector<double> cost(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> parent(n, n);
    std::vector<std::uint8_t> closed(n, 0);

    struct Entry {
        double f;
        double g;
        std::size_t k;
        bool operator>(const Entry& o) const {
            if (f != o.f) return f > o.f;
            if (g != o.g) return g < o.g;  // prefer deeper nodes on ties
            return k > o.k;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    cost[grid.flat(s)] = 0.0;
    open.push({detail::octile(s, g), 0.0, grid.flat(s)});
    const std::size_t gk = grid.flat(g);
    while (!open.empty()) {
        const Entry e = open.top();
        open.pop();
        if (closed[e.k]) {
            continue;
        }
        closed[e.k] = 1;
        if (e.k == gk) {
            break;
        }
        const CellIndex c = grid.unflat(e.k);
        for (const auto& m : detail::kMoves) {
            if (!detail::move_allowed(grid, c, m)) {
                continue;
            }
            const CellIndex o{c.i + m.di, c.j + m.dj};
            const std::size_t ok = grid.flat(o);
            const double ng = e.g + m.cost;
            if (ng < cost[ok]) {
                cost[ok] = ng;
                parent[ok] = e.k;
                open.push({ng + detail::octile(o, g), ng, ok});
            }
        }
    }
    if (!closed[gk]) {
        throw NoPath("astar_shortest: goal is not reachable from start");
    }
    std::vector<CellIndex> cells;
    for (std::size_t k = gk; k != n; k = parent[k]) {
        cells.push_back(grid.unflat(k));
    }
    std::reverse(cells.begin(), cells.end());
    return detail::make_grid_path(grid, std::move(cells), start, goal);
}

/// Dijkstra distance field towards a fixed goal. `distance(p)` uses the
/// same construction as astar_shortest's polyline length: the leg from p to
/// its cell centre, the grid path, and the leg from the goal cell centre to
/// the goal.
class GeodesicField {
  public:
    GeodesicField(const OccupancyGrid& grid, const Point2& goal) : grid_(&grid), goal_(goal) {
        if (!grid.is_free(goal)) {
            throw InvalidInput("GeodesicField: goal is not free");
        }
        const std::size_t n = grid.cells().size();
        cost_.assign(n, std::numeric_limits<double>::infinity());
        const CellIndex g = grid.cell_of(goal);
        goal_leg_ = sctnav::distance(grid.cell_center(g), goal);
        using Entry = std::pair<double, std::size_t>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
        cost_[grid.flat(g)] = 0.0;
        open.push({0.0, grid.flat(g)});
        while (!open.empty()) {
            const auto [c, k] = open.top();
            open.pop();
            if (c > cost_[k]) {
                continue;
            }
            const CellIndex cell = grid.unflat(k);
            for (const auto& m : detail::kMoves) {
                if (!detail::move_allowed(grid, cell, m)) {
                    continue;
                }
                const std::size_t ok = grid.flat({cell.i + m.di, cell.j + m.dj});
                if (c + m.cost < cost_[ok]) {
                    cost_[ok] = c + m.cost;
                    open.push({cost_[ok], ok});
                }
            }
        }
    }

    /// Geodesic distance in metres, or nullopt if p is blocked/disconnected.
    [[nodiscard]] std::optional<double> distance(const Point2& p) const {
        const CellIndex c = grid_->cell_of(p);
        if (!grid_->cell_free(c)) {
            return std::nullopt;
        }
        const double cells = cost_[grid_->flat(c)];
        if (!std::isfinite(cells)) {
            return std::nullopt;
        }
        return sctnav::distance(p, grid_->cell_center(c)) + cells * grid_->resolution() + goal_leg_;
    }

    [[nodiscard]] const Point2& goal() const noexcept { return goal_; }

  private:
    const OccupancyGrid* grid_;
    Point2 goal_;
    double goal_leg_ = 0.0;
    std::vector<double> cost_;
};

/// Greedy line-of-sight shortcutting of a polyline: keeps a subset of its
/// vertices such that every kept segment is collision-free.
[[nodiscard]] inline Polyline simplify_polyline(const OccupancyGrid& grid, const Polyline& path,
                                                double spacing = kDefaultSampleSpacing) {
    Polyline out;
    if (path.vertices.empty()) {
        return out;
    }
    std::size_t i = 0;
    out.vertices.push_back(path.vertices.front());
    while (i + 1 < path.vertices.size()) {
        std::size_t j = path.vertices.size() - 1;
        while (j > i + 1 && segment_collides(grid, path.vertices[i], path.vertices[j], spacing)) {
            --j;
        }
        out.vertices.push_back(path.vertices[j]);
        i = j;
    }
    return out;
}

}  // namespace sctnav
