#include "evspde/levelset.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "evspde/csv.hpp"

namespace evspde::geometry {

double LevelSetField::value(double x, double y) noexcept
{
    const double s = y * y - 1.0;
    return 0.5 * x * x + 0.5 * s * s;
}

double LevelSetField::x(int i) const noexcept { return -xmax + 2.0 * xmax * i / (resolution - 1); }
double LevelSetField::y(int j) const noexcept { return -ymax + 2.0 * ymax * j / (resolution - 1); }
double LevelSetField::cell_width() const noexcept { return 2.0 * xmax / (resolution - 1); }
double LevelSetField::cell_height() const noexcept { return 2.0 * ymax / (resolution - 1); }

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a)
    {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

LevelSetResult level_set_components(const LevelSetField& field, double c)
{
    if (!(c > 0.0)) {
        throw std::invalid_argument("level_set_components: level c must be > 0");
    }
    if (field.resolution < 64) {
        throw std::invalid_argument("level_set_components: resolution must be >= 64");
    }
    if (!(field.xmax > 0.0) || !(field.ymax > 0.0)) {
        throw std::invalid_argument("level_set_components: domain half-widths must be positive");
    }

    const int n = field.resolution;
    std::vector<double> f(static_cast<std::size_t>(n) * n);
    auto at = [&](int i, int j) -> double& { return f[static_cast<std::size_t>(j) * n + i]; };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            at(i, j) = LevelSetField::value(field.x(i), field.y(j));
        }
    }

    // Edge ids: horizontal (i,j)-(i+1,j) first, then vertical (i,j)-(i,j+1).
    const int horizontal = (n - 1) * n;
    auto h_edge = [&](int i, int j) { return j * (n - 1) + i; };
    auto v_edge = [&](int i, int j) { return horizontal + i * (n - 1) + j; };
    const int edge_count = 2 * horizontal;

    std::unordered_map<int, ContourPoint> crossing;
    auto crossing_point = [&](int edge) -> ContourPoint {
        if (auto it = crossing.find(edge); it != crossing.end()) {
            return it->second;
        }
        int i0, j0, i1, j1;
        if (edge < horizontal) {
            j0 = j1 = edge / (n - 1);
            i0 = edge % (n - 1);
            i1 = i0 + 1;
        } else {
            const int e = edge - horizontal;
            i0 = i1 = e / (n - 1);
            j0 = e % (n - 1);
            j1 = j0 + 1;
        }
        const double fa = at(i0, j0);
        const double fb = at(i1, j1);
        const double w = (c - fa) / (fb - fa);
        ContourPoint p{field.x(i0) + w * (field.x(i1) - field.x(i0)),
                       field.y(j0) + w * (field.y(j1) - field.y(j0))};
        crossing.emplace(edge, p);
        return p;
    };

    UnionFind uf(edge_count);
    std::vector<std::array<int, 2>> segments;
    std::unordered_map<int, std::vector<int>> adjacency;
    auto add_segment = [&](int a, int b) {
        crossing_point(a);
        crossing_point(b);
        uf.unite(a, b);
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
        segments.push_back({a, b});
    };

    for (int j = 0; j + 1 < n; ++j) {
        for (int i = 0; i + 1 < n; ++i) {
            const std::array<double, 4> v{at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
            int code = 0;
            for (int k = 0; k < 4; ++k) {
                code |= (v[k] > c ? 1 : 0) << k;
            }
            if (code == 0 || code == 15) {
                continue;
            }
            // bottom, right, top, left; edge k joins corner k and k+1
            const std::array<int, 4> e{h_edge(i, j), v_edge(i + 1, j), h_edge(i, j + 1), v_edge(i, j)};
            if (code == 5 || code == 10) {
                const bool centre_above = 0.25 * (v[0] + v[1] + v[2] + v[3]) > c;
                // cut off the corners that are not joined through the centre
                const bool cut_odd = (code == 5) == centre_above;
                if (cut_odd) {
                    add_segment(e[0], e[1]);
                    add_segment(e[2], e[3]);
                } else {
                    add_segment(e[3], e[0]);
                    add_segment(e[1], e[2]);
                }
                continue;
            }
            std::array<int, 2> hit{};
            int count = 0;
            for (int k = 0; k < 4; ++k) {
                const bool a = v[k] > c;
                const bool b = v[(k + 1) % 4] > c;
                if (a != b) {
                    hit[count++] = e[k];
                }
            }
            add_segment(hit[0], hit[1]);
        }
    }

    LevelSetResult result;
    result.level = c;
    std::unordered_map<int, int> component_of_root;
    for (const auto& [edge, p] : crossing) {
        (void)p;
        const int root = uf.find(edge);
        if (!component_of_root.contains(root)) {
            component_of_root.emplace(root, 0);
        }
    }
    // Deterministic numbering: order components by their smallest edge id.
    std::vector<std::pair<int, int>> first_edge; // (min edge, root)
    {
        std::unordered_map<int, int> min_edge;
        for (const auto& [edge, p] : crossing) {
            (void)p;
            const int root = uf.find(edge);
            auto it = min_edge.find(root);
            if (it == min_edge.end() || edge < it->second) {
                min_edge[root] = edge;
            }
        }
        for (const auto& [root, edge] : min_edge) {
            first_edge.emplace_back(edge, root);
        }
        std::sort(first_edge.begin(), first_edge.end());
        for (std::size_t k = 0; k < first_edge.size(); ++k) {
            component_of_root[first_edge[k].second] = static_cast<int>(k);
        }
    }
    result.components = static_cast<int>(first_edge.size());

    // Walk polylines: open chains from degree-1 ends first, then closed loops.
    std::vector<int> nodes;
    nodes.reserve(adjacency.size());
    for (const auto& [edge, nb] : adjacency) {
        (void)nb;
        nodes.push_back(edge);
    }
    std::sort(nodes.begin(), nodes.end());
    std::unordered_map<int, bool> visited;
    auto walk = [&](int start) {
        ContourPolyline line;
        line.component = component_of_root.at(uf.find(start));
        int prev = -1;
        int cur = start;
        while (true) {
            visited[cur] = true;
            line.points.push_back(crossing.at(cur));
            int next = -1;
            for (int cand : adjacency.at(cur)) {
                if (cand != prev && !visited[cand]) {
                    next = cand;
                    break;
                }
            }
            if (next < 0) {
                for (int cand : adjacency.at(cur)) {
                    if (cand == start && cand != prev && line.points.size() > 2) {
                        line.closed = true;
                        line.points.push_back(crossing.at(start));
                    }
                }
                break;
            }
            prev = cur;
            cur = next;
        }
        result.polylines.push_back(std::move(line));
    };
    for (int node : nodes) {
        if (!visited[node] && adjacency.at(node).size() == 1) {
            walk(node);
        }
    }
    for (int node : nodes) {
        if (!visited[node]) {
            walk(node);
        }
    }
    std::stable_sort(result.polylines.begin(), result.polylines.end(),
                     [](const ContourPolyline& a, const ContourPolyline& b) { return a.component < b.component; });
    return result;
}

std::string contour_csv(const LevelSetResult& result)
{
    CsvBuilder csv({"component_id", "x", "y"});
    for (const auto& line : result.polylines) {
        for (const auto& p : line.points) {
            csv.cell(line.component).cell(p.x).cell(p.y).end_row();
        }
    }
    return csv.str();
}

} // namespace evspde::geometry
