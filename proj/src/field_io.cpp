#include "pme/field_io.hpp"

#include <fstream>

#include <json.hpp>

#include "pme/common.hpp"

namespace pme {

namespace {

const char* kind_name(FieldKind k) {
    switch (k) {
        case FieldKind::density: return "density";
        case FieldKind::velocity: return "velocity-component";
        default: return "scalar";
    }
}

FieldKind kind_of(const std::string& s) {
    if (s == "density") return FieldKind::density;
    if (s == "velocity-component") return FieldKind::velocity;
    return FieldKind::scalar;
}

}  // namespace

void write_field(const GridField& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "write_field: cannot open " + path);
    nlohmann::json hdr = {
        {"dim", f.grid.dim}, {"n", f.grid.n}, {"kind", kind_name(f.kind)}};
    out << hdr.dump() << "\n";
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    require(out.good(), "write_field: write failed for " + path);
}

GridField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "read_field: cannot open " + path);
    std::string line;
    std::getline(in, line);
    nlohmann::json hdr = nlohmann::json::parse(line);
    PeriodicGrid grid(hdr.at("dim").get<int>(), hdr.at("n").get<int>());
    GridField f(grid, kind_of(hdr.value("kind", "scalar")));
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    require(static_cast<std::size_t>(in.gcount()) ==
                f.values.size() * sizeof(double),
            "read_field: truncated data in " + path);
    return f;
}

}  // namespace pme
