#include "axdg/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace axdg {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

void write_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::ifstream& f, const std::string& path) {
    std::uint32_t v = 0;
    if (!f.read(reinterpret_cast<char*>(&v), 4))
        throw std::runtime_error(path + ": truncated checkpoint");
    return v;
}

constexpr char kMagic[4] = {'A', 'X', 'D', 'G'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, Tensor>>& tensors) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f.write(kMagic, 4);
    write_u32(f, kVersion);
    for (const auto& [name, t] : tensors) {
        write_u32(f, (std::uint32_t)name.size());
        f.write(name.data(), (std::streamsize)name.size());
        write_u32(f, (std::uint32_t)t.rank());
        for (std::size_t i = 0; i < t.rank(); ++i) write_u32(f, (std::uint32_t)t.dim(i));
        std::vector<float> buf(t.numel());
        for (std::size_t i = 0; i < t.numel(); ++i) buf[i] = (float)t.at(i);
        f.write(reinterpret_cast<const char*>(buf.data()),
                (std::streamsize)(buf.size() * sizeof(float)));
    }
    if (!f) throw std::runtime_error(path + ": write failed");
}

std::vector<std::pair<std::string, Tensor>> load_tensors(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open");
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error(path + ": bad magic");
    const std::uint32_t version = read_u32(f, path);
    if (version != kVersion)
        throw std::runtime_error(path + ": unsupported version " + std::to_string(version));

    std::vector<std::pair<std::string, Tensor>> out;
    while (true) {
        std::uint32_t name_len = 0;
        if (!f.read(reinterpret_cast<char*>(&name_len), 4)) break;  // clean EOF
        std::string name(name_len, '\0');
        if (!f.read(name.data(), name_len))
            throw std::runtime_error(path + ": truncated checkpoint");
        const std::uint32_t rank = read_u32(f, path);
        if (rank < 1 || rank > 2) throw std::runtime_error(path + ": bad tensor rank");
        std::vector<std::size_t> shape;
        std::size_t numel = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            const std::uint32_t d = read_u32(f, path);
            shape.push_back(d);
            numel *= d;
        }
        std::vector<float> buf(numel);
        if (!f.read(reinterpret_cast<char*>(buf.data()),
                    (std::streamsize)(numel * sizeof(float))))
            throw std::runtime_error(path + ": truncated checkpoint");
        Tensor t(shape);
        for (std::size_t i = 0; i < numel; ++i) t.at(i) = buf[i];
        out.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

void save_checkpoint(const std::string& path, const ParamStore& store) {
    std::vector<std::pair<std::string, Tensor>> tensors;
    tensors.reserve(store.size());
    for (std::size_t s = 0; s < store.size(); ++s) {
        const auto& e = store.entry((int)s);
        tensors.emplace_back(e.name, e.value);
    }
    save_tensors(path, tensors);
}

void load_checkpoint(const std::string& path, ParamStore& store) {
    for (auto& [name, t] : load_tensors(path)) {
        const int slot = store.find(name);
        if (slot < 0) throw std::runtime_error(path + ": unexpected tensor '" + name + "'");
        Tensor& dst = store.value(slot);
        if (!dst.same_shape(t))
            throw std::runtime_error(path + ": shape mismatch for '" + name + "'");
        dst = std::move(t);
    }
}

}  // namespace axdg
