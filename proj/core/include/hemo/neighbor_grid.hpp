#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hemo/vec.hpp"

namespace hemo {

struct NeighborLists {
    std::vector<int> fluid;
    std::vector<int> proxy;
};

// Per-frame neighbor lists for every fluid particle, stored as two flat
// CSR tables. Row i holds the neighbors of fluid particle i in ascending
// index order, self excluded.
struct NeighborTable {
    std::vector<int> fluid_start, proxy_start;  // rows()+1 offsets each
    std::vector<int> fluid_idx, proxy_idx;

    int rows() const { return static_cast<int>(fluid_start.size()) - 1; }
    std::span<const int> fluid(int i) const {
        return {fluid_idx.data() + fluid_start[i],
                static_cast<std::size_t>(fluid_start[i + 1] - fluid_start[i])};
    }
    std::span<const int> proxy(int i) const {
        return {proxy_idx.data() + proxy_start[i],
                static_cast<std::size_t>(proxy_start[i + 1] - proxy_start[i])};
    }
};

// Uniform grid with cell size h. Immutable after build except for
// rebuild_fluid(), which re-bins the fluid side and keeps the proxy cells.
// Queries return exact fixed-radius results (strict |r| < h) with indices
// in ascending order, so downstream sums are independent of build order.
// Cells are kept as a sorted key array with cell-major packed positions;
// query_all amortizes the stencil walk over all particles sharing a cell.
class NeighborGrid {
public:
    NeighborGrid() = default;
    NeighborGrid(std::vector<Vec3> fluid_positions,
                 std::vector<Vec3> proxy_positions, double h);

    void rebuild_fluid(std::vector<Vec3> fluid_positions);

    // Neighbors of fluid particle i, self excluded.
    NeighborLists query(int i) const;
    void query(int i, std::vector<int>& fluid_out,
               std::vector<int>& proxy_out) const;

    // Neighbors of every fluid particle in one pass. Equivalent to calling
    // query(i) for each row, much cheaper. `out` is reused across frames.
    void query_all(NeighborTable& out, int threads = 1) const;

    // Neighbors of an arbitrary point. No self exclusion: a particle located
    // exactly at r is included, which is what the proxy volume sum wants.
    NeighborLists query_point(const Vec3& r) const;
    void query_point(const Vec3& r, std::vector<int>& fluid_out,
                     std::vector<int>& proxy_out) const;

    double cell_size() const { return h_; }
    std::size_t fluid_count() const { return fluid_.size(); }
    std::size_t proxy_count() const { return proxy_.size(); }
    const std::vector<Vec3>& fluid_positions() const { return fluid_; }
    const std::vector<Vec3>& proxy_positions() const { return proxy_; }

private:
    // One side of the grid: occupied cells sorted by packed key, member
    // particles packed cell-major (ascending index within a cell).
    struct CellStore {
        std::vector<std::uint64_t> key;
        std::vector<int> start;  // key.size()+1 CSR offsets into id/pos
        std::vector<int> id;
        std::vector<Vec3> pos;

        void build(const std::vector<Vec3>& src, const char* tag, double h);
        void clear();
    };

    // Contiguous candidate ranges of a 27-cell stencil within one store
    // (each range covers the z-run of one (x,y) column).
    struct Stencil {
        int lo[9], hi[9];
        int count = 0;
    };

    Stencil stencil(const CellStore& side, std::int64_t cx, std::int64_t cy,
                    std::int64_t cz) const;
    void gather(const Vec3& center, int exclude_fluid, std::vector<int>& fluid_out,
                std::vector<int>& proxy_out) const;

    double h_ = 0.0;
    std::vector<Vec3> fluid_;
    std::vector<Vec3> proxy_;
    CellStore fluid_cells_;
    CellStore proxy_cells_;
};

}  // namespace hemo
