#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "swde/errors.hpp"
#include "swde/numerics/tensor.hpp"

// Binary model file:
//
//   offset 0   "SWDE"                     4 bytes
//   offset 4   format version             u32 little-endian
//   offset 8   manifest length N          u64 little-endian
//   offset 16  manifest                   N bytes of UTF-8 JSON
//   offset 16+N payload                   little-endian f32 arrays
//
// The manifest carries free-form metadata plus a "tensors" array of
// {name, shape, dtype:"f32", offset}, offsets in bytes from the payload start.
// Tensors are laid out back to back in manifest order.

namespace swde {

inline constexpr char kContainerMagic[4] = {'S', 'W', 'D', 'E'};
inline constexpr std::uint32_t kContainerVersion = 1;

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

struct Container {
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<NamedTensor> tensors;

    const Tensor& tensor(const std::string& name) const {
        for (const auto& t : tensors) {
            if (t.name == name) return t.tensor;
        }
        throw ContainerError("bad container: missing tensor " + name);
    }
};

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(const unsigned char* p) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline std::string serialize(const Container& c) {
    nlohmann::json manifest = c.metadata;
    auto& list = manifest["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& nt : c.tensors) {
        list.push_back({{"name", nt.name}, {"shape", nt.tensor.shape()}, {"dtype", "f32"}, {"offset", offset}});
        offset += 4 * nt.tensor.size();
    }
    const std::string text = manifest.dump();

    std::string out(kContainerMagic, 4);
    detail::put_le<std::uint32_t>(out, kContainerVersion);
    detail::put_le<std::uint64_t>(out, text.size());
    out += text;
    out.reserve(out.size() + offset);
    for (const auto& nt : c.tensors) {
        for (double v : nt.tensor.data()) {
            detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
    return out;
}

inline Container deserialize(const std::string& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kContainerMagic, 4) != 0) {
        throw ContainerError("bad container: magic bytes mismatch");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const auto version = detail::get_le<std::uint32_t>(p + 4);
    if (version != kContainerVersion) {
        throw ContainerError("bad container: unsupported format version " + std::to_string(version));
    }
    const auto manifest_len = detail::get_le<std::uint64_t>(p + 8);
    if (manifest_len > bytes.size() - 16) throw ContainerError("bad container: truncated manifest");
    auto manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(manifest_len),
                                          nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object() || !manifest.contains("tensors") ||
        !manifest["tensors"].is_array()) {
        throw ContainerError("bad container: unreadable manifest");
    }
    const std::size_t payload_start = 16 + manifest_len;
    const std::size_t payload_len = bytes.size() - payload_start;

    Container c;
    std::uint64_t expected_offset = 0;
    try {
        for (const auto& entry : manifest["tensors"]) {
            const auto name = entry.at("name").get<std::string>();
            const auto shape = entry.at("shape").get<Shape>();
            const auto offset = entry.at("offset").get<std::uint64_t>();
            if (entry.at("dtype").get<std::string>() != "f32") {
                throw ContainerError("bad container: tensor " + name + " is not f32");
            }
            if (offset != expected_offset) {
                throw ContainerError("bad container: tensor " + name + " offset " + std::to_string(offset) +
                                     " is not contiguous (expected " + std::to_string(expected_offset) + ")");
            }
            if (shape.empty()) throw ContainerError("bad container: tensor " + name + " has no shape");
            const std::size_t n = shape_numel(shape);
            if (offset + 4 * n > payload_len) throw ContainerError("bad container: tensor " + name + " truncated");
            std::vector<double> data(n);
            const unsigned char* src = p + payload_start + offset;
            for (std::size_t i = 0; i < n; ++i) {
                data[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(src + 4 * i));
            }
            c.tensors.push_back({name, Tensor(shape, std::move(data))});
            expected_offset += 4 * n;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ContainerError(std::string("bad container: malformed tensor entry: ") + e.what());
    } catch (const DimensionError& e) {
        throw ContainerError(std::string("bad container: ") + e.what());
    }
    if (expected_offset != payload_len) {
        throw ContainerError("bad container: payload is " + std::to_string(payload_len) + " bytes, manifest describes " +
                             std::to_string(expected_offset));
    }
    manifest.erase("tensors");
    c.metadata = std::move(manifest);
    return c;
}

inline void save_container(const Container& c, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model file " + path.string());
    const std::string bytes = serialize(c);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing model file " + path.string());
}

inline Container load_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContainerError("bad container: cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace swde
