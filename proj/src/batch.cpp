#include "mfm/batch.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mfm/error.hpp"

namespace mfm {

void validate_batch(const Batch& b, const std::string& what) {
    if (b.k < 1 || b.d < 1) throw shape_error(what + ": batch must have k >= 1 and d >= 1");
    if (b.x.size() != static_cast<size_t>(b.k) * b.d)
        throw shape_error(what + ": storage size does not match k*d");
    for (double v : b.x)
        if (!std::isfinite(v)) throw numerical_error(what + ": non-finite entry in batch");
}

void save_batch(const std::string& path, const Batch& b) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw io_error("cannot open '" + path + "' for writing");
    std::fprintf(f, "# %d columns\n", b.d);
    for (int i = 0; i < b.k; ++i) {
        for (int j = 0; j < b.d; ++j)
            std::fprintf(f, "%.17g%c", b.at(i, j), j + 1 == b.d ? '\n' : ',');
    }
    if (std::fclose(f) != 0) throw io_error("write failed for '" + path + "'");
}

Batch load_batch(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");

    std::vector<double> values;
    int d = -1;
    int row = 0;   // 1-based data row index for error messages
    int line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        ++row;
        int cols = 0;
        const char* p = line.c_str();
        while (true) {
            char* end = nullptr;
            double v = std::strtod(p, &end);
            if (end == p)
                throw io_error(path + ": non-numeric cell in row " + std::to_string(row) +
                               " (line " + std::to_string(line_no) + ")");
            values.push_back(v);
            ++cols;
            while (*end == ' ' || *end == '\t') ++end;
            if (*end == ',') {
                p = end + 1;
            } else if (*end == '\0') {
                break;
            } else {
                throw io_error(path + ": unexpected character '" + std::string(1, *end) +
                               "' in row " + std::to_string(row));
            }
        }
        if (d < 0) {
            d = cols;
        } else if (cols != d) {
            throw io_error(path + ": row " + std::to_string(row) + " has " + std::to_string(cols) +
                           " columns, expected " + std::to_string(d));
        }
    }
    if (row == 0) throw io_error(path + ": empty batch (no data rows)");

    Batch b(row, d);
    b.x = std::move(values);
    validate_batch(b, path);
    return b;
}

}  // namespace mfm
