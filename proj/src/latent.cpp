#include "noveval/latent.hpp"

#include <fstream>
#include <sstream>

namespace noveval {

void write_latent_csv(const std::filesystem::path& path, const LatentMatrix& m) {
    if (m.ids.size() != m.z.rows) throw ValidationError("latent ids/rows mismatch");
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open for writing: " + path.string());
    f << "id";
    for (std::size_t j = 0; j < m.z.cols; ++j) f << ",z" << j;
    f << "\n";
    for (std::size_t i = 0; i < m.z.rows; ++i) {
        f << m.ids[i];
        for (std::size_t j = 0; j < m.z.cols; ++j) f << "," << format_double(m.z.at(i, j));
        f << "\n";
    }
}

LatentMatrix read_latent_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw ValidationError("empty latent csv: " + path.string());
    std::size_t dim = 0;
    {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> header;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
        if (header.empty() || header[0] != "id")
            throw ValidationError("latent csv must start with an id column: " + path.string());
        dim = header.size() - 1;
    }
    if (dim == 0) throw ValidationError("latent csv has no z columns: " + path.string());

    std::vector<std::int64_t> ids;
    std::vector<double> values;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        ids.push_back(std::stoll(cell));
        std::size_t got = 0;
        while (std::getline(ss, cell, ',')) {
            values.push_back(std::stod(cell));
            ++got;
        }
        if (got != dim)
            throw ValidationError("latent csv row width mismatch in " + path.string());
    }
    LatentMatrix m;
    m.ids = std::move(ids);
    m.z.rows = m.ids.size();
    m.z.cols = dim;
    m.z.v = std::move(values);
    return m;
}

LatentMatrix select_rows(const LatentMatrix& m, const std::vector<std::size_t>& indices) {
    LatentMatrix out;
    out.z.rows = indices.size();
    out.z.cols = m.z.cols;
    out.z.v.reserve(indices.size() * m.z.cols);
    out.ids.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= m.z.rows) throw ValidationError("row index out of range");
        out.ids.push_back(m.ids[i]);
        auto row = m.z.row(i);
        out.z.v.insert(out.z.v.end(), row.begin(), row.end());
    }
    return out;
}

}  // namespace noveval
