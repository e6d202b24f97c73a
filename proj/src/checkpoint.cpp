#include "tqe/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>

namespace tqe {

namespace {

constexpr char kMagic[4] = {'Q', 'E', 'F', '1'};

void append_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    append_u64(buf, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw CorruptCheckpoint("checkpoint truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

const std::vector<double>& Checkpoint::array(const std::string& name) const {
    for (const auto& [n, a] : arrays)
        if (n == name) return a;
    throw CorruptCheckpoint("checkpoint is missing array '" + name + "'");
}

bool Checkpoint::has_array(const std::string& name) const {
    for (const auto& [n, a] : arrays)
        if (n == name) return true;
    return false;
}

std::string Checkpoint::meta(const std::string& key) const {
    const auto it = metadata.find(key);
    if (it == metadata.end()) throw CorruptCheckpoint("checkpoint is missing metadata '" + key + "'");
    return it->second;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ostringstream meta;
    meta << "version=" << ckpt.version << "\n";
    meta << "kind=" << ckpt.kind << "\n";
    for (const auto& [k, v] : ckpt.metadata)
        if (k != "version" && k != "kind") meta << k << "=" << v << "\n";
    const std::string meta_str = meta.str();

    std::string payload;
    append_u32(payload, static_cast<std::uint32_t>(meta_str.size()));
    payload += meta_str;
    append_u32(payload, static_cast<std::uint32_t>(ckpt.arrays.size()));
    for (const auto& [name, values] : ckpt.arrays) {
        append_u32(payload, static_cast<std::uint32_t>(name.size()));
        payload += name;
        append_u64(payload, values.size());
        for (double v : values) append_f64(payload, v);
    }
    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write " + path);
    out.write(kMagic, 4);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    std::string crc_buf;
    append_u32(crc_buf, crc);
    out.write(crc_buf.data(), 4);
    if (!out) throw IoFailure("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string file = ss.str();
    if (file.size() < 8 || std::memcmp(file.data(), kMagic, 4) != 0)
        throw CorruptCheckpoint("bad magic in " + path);

    const std::string payload = file.substr(4, file.size() - 8);
    Reader crc_reader{file, file.size() - 4};
    const std::uint32_t stored_crc = crc_reader.u32();
    const std::uint32_t actual_crc = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
    if (stored_crc != actual_crc) throw CorruptCheckpoint("checksum mismatch in " + path);

    Reader r{payload};
    Checkpoint ckpt;
    const std::uint32_t meta_len = r.u32();
    std::istringstream meta_in(r.bytes(meta_len));
    std::string line;
    while (std::getline(meta_in, line)) {
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        ckpt.metadata[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (!ckpt.metadata.count("version")) throw CorruptCheckpoint("missing version field");
    ckpt.version = static_cast<std::uint32_t>(std::stoul(ckpt.metadata.at("version")));
    if (ckpt.version != kCheckpointVersion)
        throw VersionMismatch("unsupported checkpoint version " + std::to_string(ckpt.version));
    ckpt.kind = ckpt.metadata.count("kind") ? ckpt.metadata.at("kind") : "";

    const std::uint32_t n_arrays = r.u32();
    for (std::uint32_t i = 0; i < n_arrays; ++i) {
        const std::uint32_t name_len = r.u32();
        std::string name = r.bytes(name_len);
        const std::uint64_t count = r.u64();
        r.need(count * 8);
        std::vector<double> values(count);
        for (std::uint64_t j = 0; j < count; ++j) values[j] = r.f64();
        ckpt.arrays.emplace_back(std::move(name), std::move(values));
    }
    if (r.pos != payload.size()) throw CorruptCheckpoint("trailing bytes in " + path);
    return ckpt;
}

}  // namespace tqe
