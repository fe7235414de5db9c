#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dising/errors.hpp"
#include "dising/model.hpp"

namespace dising {

using AnyInstance = std::variant<IsingInstance, MrfInstance>;

// Text instance format.
//   header:  `ising <n>`  or  `mrf <k> <n>`
//   entries: `<i> <j> <value>` (Ising; sets both J[i][j] and J[j][i])
//            `<i1> ... <ik> <value>` (MRF)
//   fields:  `h <i> <value>` (Ising only)
// Indices are 1-based; `#` starts a comment line; blank lines are skipped.
inline AnyInstance parse_instance(std::istream& in) {
    std::string line;
    int lineno = 0;
    std::optional<IsingInstance> ising;
    std::optional<MrfInstance> mrf;

    auto next_content_line = [&](std::string& out) -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos) continue;
            if (line[pos] == '#') continue;
            out = line;
            return true;
        }
        return false;
    };

    std::string content;
    if (!next_content_line(content)) throw parse_error("empty instance file", lineno == 0 ? 1 : lineno);

    {
        std::istringstream hs(content);
        std::string kind;
        hs >> kind;
        if (kind == "ising") {
            int n;
            if (!(hs >> n) || n < 1) throw parse_error("bad ising header, expected `ising <n>`", lineno);
            ising.emplace(n);
        } else if (kind == "mrf") {
            int k, n;
            if (!(hs >> k >> n) || k < 3 || n < 1)
                throw parse_error("bad mrf header, expected `mrf <k> <n>` with k >= 3", lineno);
            mrf.emplace(n, k);
        } else {
            throw parse_error("unknown header `" + kind + "`", lineno);
        }
        std::string extra;
        if (hs >> extra) throw parse_error("trailing tokens after header", lineno);
    }

    while (next_content_line(content)) {
        std::istringstream ls(content);
        std::string first;
        ls >> first;
        if (first == "h") {
            if (!ising) throw parse_error("field line in mrf instance", lineno);
            int i;
            double v;
            if (!(ls >> i >> v)) throw parse_error("bad field line, expected `h <i> <value>`", lineno);
            if (i < 1 || i > ising->n) throw parse_error("field index out of range", lineno);
            ising->h[i - 1] = v;
        } else if (ising) {
            int i, j;
            double v;
            std::istringstream es(content);
            if (!(es >> i >> j >> v))
                throw parse_error("bad entry line, expected `<i> <j> <value>`", lineno);
            if (i < 1 || i > ising->n || j < 1 || j > ising->n)
                throw parse_error("entry index out of range", lineno);
            std::string extra;
            if (es >> extra) throw parse_error("trailing tokens after entry", lineno);
            ising->set_coupling(i - 1, j - 1, v);
        } else {
            std::istringstream es(content);
            std::vector<int> idx(mrf->k);
            double v;
            for (int t = 0; t < mrf->k; ++t) {
                if (!(es >> idx[t])) throw parse_error("bad mrf entry line", lineno);
                if (idx[t] < 1 || idx[t] > mrf->n) throw parse_error("entry index out of range", lineno);
                --idx[t];
            }
            if (!(es >> v)) throw parse_error("missing value on mrf entry line", lineno);
            std::string extra;
            if (es >> extra) throw parse_error("trailing tokens after entry", lineno);
            mrf->set_entry(idx, v);
        }
    }

    if (ising) {
        ising->validate();
        return *ising;
    }
    mrf->validate();
    return *mrf;
}

namespace detail {
inline void write_double(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}
} // namespace detail

inline void write_instance(std::ostream& out, const IsingInstance& inst) {
    out << "ising " << inst.n << "\n";
    for (int i = 0; i < inst.n; ++i)
        for (int j = i; j < inst.n; ++j)
            if (inst.j(i, j) != 0.0) {
                out << (i + 1) << " " << (j + 1) << " ";
                detail::write_double(out, inst.j(i, j));
                out << "\n";
            }
    for (int i = 0; i < inst.n; ++i)
        if (inst.h[i] != 0.0) {
            out << "h " << (i + 1) << " ";
            detail::write_double(out, inst.h[i]);
            out << "\n";
        }
}

inline void write_instance(std::ostream& out, const MrfInstance& inst) {
    out << "mrf " << inst.k << " " << inst.n << "\n";
    for (const auto& [idx, v] : inst.entries) {
        if (v == 0.0) continue;
        for (int i : idx) out << (i + 1) << " ";
        detail::write_double(out, v);
        out << "\n";
    }
}

} // namespace dising
