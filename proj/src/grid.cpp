// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#include "nff/grid.hpp"

namespace nff {

GridMeta GridMeta::build(const HashGridConfig& cfg) {
    NFF_CHECK(cfg.levels >= 1 && cfg.feat >= 1, ErrKind::config, "grid needs levels, features >= 1");
    NFF_CHECK(cfg.table_size > 0 && (cfg.table_size & (cfg.table_size - 1)) == 0, ErrKind::config,
              "grid table_size must be a power of two, got ", cfg.table_size);
    NFF_CHECK(cfg.base_res >= 1 && cfg.growth >= 1.0, ErrKind::config, "bad grid resolution plan");

    GridMeta m;
    m.cfg = cfg;
    int64_t actors = std::max(1, cfg.n_actors);
    double r = cfg.base_res;
    for (int l = 0; l < cfg.levels; ++l, r *= cfg.growth) {
        int64_t res = static_cast<int64_t>(std::llround(r));
        if (!m.res.empty() && res <= m.res.back()) res = m.res.back() + 1; // keep strictly increasing
        int64_t vpa = res + 1;
        int64_t vertices = vpa * vpa * vpa * actors;
        bool dense = vertices <= cfg.table_size;
        m.res.push_back(res);
        m.dense.push_back(dense ? 1 : 0);
        m.rows.push_back(dense ? vertices : cfg.table_size);
        m.row_off.push_back(m.total_rows);
        m.total_rows += m.rows.back();
    }
    return m;
}

kernels::GridSpec GridMeta::spec(const int64_t* actor_idx) const {
    kernels::GridSpec g;
    g.levels = cfg.levels;
    g.feat = cfg.feat;
    g.res = res.data();
    g.rows = rows.data();
    g.row_off = row_off.data();
    g.dense = dense.data();
    g.actor = actor_idx;
    return g;
}

} // namespace nff
