#include "proseforge/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "proseforge/errors.hpp"

namespace proseforge::checkpoint {

namespace {

constexpr char kMagic[8] = {'P', 'F', 'O', 'R', 'G', 'E', '0', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out.write(buf, 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw FormatError("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& xs) {
    for (double x : xs) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof(bits));
        char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
        out.write(buf, 8);
    }
}

void read_doubles(std::istream& in, std::vector<double>& xs) {
    for (double& x : xs) {
        unsigned char buf[8];
        in.read(reinterpret_cast<char*>(buf), 8);
        if (!in) throw FormatError("checkpoint: truncated tensor data");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        std::memcpy(&x, &bits, sizeof(x));
    }
}

} // namespace

void save(const std::filesystem::path& path, const Meta& meta,
          const std::vector<NamedTensor>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, sizeof(kMagic));
    const std::string meta_str = meta.dump();
    write_u32(out, static_cast<std::uint32_t>(meta_str.size()));
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, mat] : tensors) {
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(out, static_cast<std::uint32_t>(mat->rows));
        write_u32(out, static_cast<std::uint32_t>(mat->cols));
        write_doubles(out, mat->d);
    }
    if (!out) throw IoError("write failed for " + path.string());
}

Archive load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError(path.string() + ": not a checkpoint file");
    }
    Archive ar;
    const std::uint32_t meta_len = read_u32(in);
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), meta_len);
    if (!in) throw FormatError("checkpoint: truncated metadata");
    ar.meta = Meta::parse(meta_str, nullptr, false);
    if (ar.meta.is_discarded()) throw FormatError("checkpoint: invalid metadata JSON");
    const std::uint32_t count = read_u32(in);
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw FormatError("checkpoint: truncated tensor name");
        const int rows = static_cast<int>(read_u32(in));
        const int cols = static_cast<int>(read_u32(in));
        Matrix m(rows, cols);
        read_doubles(in, m.d);
        ar.tensors.emplace(std::move(name), std::move(m));
    }
    return ar;
}

const Matrix& Archive::tensor(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError("checkpoint: missing tensor " + name);
    return it->second;
}

} // namespace proseforge::checkpoint
