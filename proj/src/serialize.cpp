// Container format shared by model checkpoints and dataset files:
//   8-byte magic, u32 format version, u64 header length, JSON header,
//   raw little-endian tensor blocks in header order, trailing FNV-1a64
//   checksum of everything before it.
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "gonet/annotations.hpp"
#include "gonet/model.hpp"

namespace gonet {

namespace {

constexpr char kMagic[8] = {'G', 'O', 'N', 'E', 'T', 'B', 'I', 'N'};

using json = nlohmann::json;

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
    put_u32(buf, std::bit_cast<std::uint32_t>(v));
}

void put_i32(std::string& buf, std::int32_t v) {
    put_u32(buf, static_cast<std::uint32_t>(v));
}

struct Cursor {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IoError("container: truncated file");
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
    float f32() { return std::bit_cast<float>(u32()); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string out = buf.substr(pos, n);
        pos += n;
        return out;
    }
};

json dict_to_json(const TermDictionary& dict) {
    return {{"namespace", to_string(dict.ns)}, {"ids", dict.ids}, {"names", dict.names}};
}

TermDictionary dict_from_json(const json& j) {
    TermDictionary dict;
    dict.ns = namespace_from_string(j.at("namespace").get<std::string>());
    dict.ids = j.at("ids").get<std::vector<std::string>>();
    dict.names = j.at("names").get<std::vector<std::string>>();
    if (dict.ids.size() != dict.names.size())
        throw ValidationError("container: dictionary ids/names length mismatch");
    return dict;
}

std::string finish_container(std::uint32_t version, const json& header,
                             const std::string& blocks) {
    std::string out(kMagic, sizeof(kMagic));
    put_u32(out, version);
    std::string head = header.dump();
    put_u64(out, head.size());
    out += head;
    out += blocks;
    put_u64(out, fnv1a64(out.data(), out.size()));
    return out;
}

struct Container {
    std::uint32_t version = 0;
    json header;
    std::string blocks;  // raw block bytes
};

Container open_container(const std::string& path, const char* what) {
    std::string raw = read_file(path);
    if (raw.size() < sizeof(kMagic) + 4 + 8 + 8)
        throw IoError(std::string(what) + ": file too short: " + path);
    if (std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0)
        throw IoError(std::string(what) + ": bad magic: " + path);

    std::uint64_t stored;
    std::memset(&stored, 0, sizeof(stored));
    Cursor tail{raw, raw.size() - 8};
    stored = tail.u64();
    std::uint64_t actual = fnv1a64(raw.data(), raw.size() - 8);
    if (stored != actual)
        throw IoError(std::string(what) + ": checksum mismatch (corrupt or truncated): " + path);

    Container c;
    Cursor cur{raw, sizeof(kMagic)};
    c.version = cur.u32();
    std::uint64_t head_len = cur.u64();
    if (cur.pos + head_len + 8 > raw.size())
        throw IoError(std::string(what) + ": truncated header: " + path);
    std::string head = cur.bytes(static_cast<std::size_t>(head_len));
    try {
        c.header = json::parse(head);
    } catch (const json::exception& e) {
        throw IoError(std::string(what) + ": bad header: " + e.what());
    }
    c.blocks = raw.substr(cur.pos, raw.size() - 8 - cur.pos);
    return c;
}

std::int64_t shape_elems(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json header;
    header["kind"] = "model";
    const ModelConfig& c = ckpt.config;
    header["config"] = {{"embed_dim", c.embed_dim},
                        {"kernel_sizes", c.kernel_sizes},
                        {"conv_filters", c.conv_filters},
                        {"gru_hidden", c.gru_hidden},
                        {"dense_hidden", c.dense_hidden},
                        {"output_dim", c.output_dim},
                        {"dropout_rate", c.dropout_rate},
                        {"max_len", c.max_len},
                        {"alphabet_hash", c.alphabet_hash}};
    header["alphabet"] = ckpt.alphabet_symbols;
    header["dictionary"] = dict_to_json(ckpt.dict);
    header["bn"] = {{"steps", ckpt.bn_steps}, {"momentum", ckpt.bn_momentum}};
    json log = json::array();
    for (const auto& e : ckpt.log)
        log.push_back({e.epoch, e.train_loss, e.val_loss, e.val_f1, e.val_mcc, e.learning_rate});
    header["log"] = std::move(log);

    json tensors = json::array();
    std::string blocks;
    for (const auto& t : ckpt.tensors) {
        tensors.push_back({{"name", t.name}, {"dtype", "f32"}, {"shape", t.shape}});
        for (float v : t.values) put_f32(blocks, v);
    }
    header["tensors"] = std::move(tensors);

    write_file(path, finish_container(ckpt.version, header, blocks));
}

Checkpoint load_checkpoint(const std::string& path) {
    Container c = open_container(path, "checkpoint");
    if (c.version != kCheckpointVersion)
        throw ValidationError("checkpoint: unsupported format version " +
                              std::to_string(c.version) + ", this build reads version " +
                              std::to_string(kCheckpointVersion));
    if (c.header.value("kind", "") != "model")
        throw ValidationError("checkpoint: file is not a model checkpoint: " + path);

    Checkpoint ckpt;
    ckpt.version = c.version;
    const json& cfg = c.header.at("config");
    ckpt.config.embed_dim = cfg.at("embed_dim").get<std::int64_t>();
    ckpt.config.kernel_sizes = cfg.at("kernel_sizes").get<std::vector<std::int64_t>>();
    ckpt.config.conv_filters = cfg.at("conv_filters").get<std::int64_t>();
    ckpt.config.gru_hidden = cfg.at("gru_hidden").get<std::int64_t>();
    ckpt.config.dense_hidden = cfg.at("dense_hidden").get<std::int64_t>();
    ckpt.config.output_dim = cfg.at("output_dim").get<std::int64_t>();
    ckpt.config.dropout_rate = cfg.at("dropout_rate").get<double>();
    ckpt.config.max_len = cfg.at("max_len").get<std::int64_t>();
    ckpt.config.alphabet_hash = cfg.at("alphabet_hash").get<std::string>();
    ckpt.alphabet_symbols = c.header.at("alphabet").get<std::string>();
    ckpt.dict = dict_from_json(c.header.at("dictionary"));
    ckpt.bn_steps = c.header.at("bn").at("steps").get<std::int64_t>();
    ckpt.bn_momentum = c.header.at("bn").at("momentum").get<double>();
    for (const auto& e : c.header.at("log")) {
        EpochStats s;
        s.epoch = e.at(0).get<std::int64_t>();
        s.train_loss = e.at(1).get<double>();
        s.val_loss = e.at(2).get<double>();
        s.val_f1 = e.at(3).get<double>();
        s.val_mcc = e.at(4).get<double>();
        s.learning_rate = e.at(5).get<double>();
        ckpt.log.push_back(s);
    }

    if (Alphabet(ckpt.alphabet_symbols).hash() != ckpt.config.alphabet_hash)
        throw ValidationError(
            "checkpoint: alphabet hash mismatch; the file's alphabet does not match the "
            "hash its config was built with");
    if (ckpt.dict.size() != ckpt.config.output_dim)
        throw ValidationError("checkpoint: dictionary size does not match output_dim");

    Cursor cur{c.blocks, 0};
    for (const auto& t : c.header.at("tensors")) {
        NamedArray arr;
        arr.name = t.at("name").get<std::string>();
        arr.shape = t.at("shape").get<std::vector<std::int64_t>>();
        if (t.at("dtype").get<std::string>() != "f32")
            throw ValidationError("checkpoint: unexpected dtype for tensor " + arr.name);
        std::int64_t n = shape_elems(arr.shape);
        arr.values.reserve(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) arr.values.push_back(cur.f32());
        ckpt.tensors.push_back(std::move(arr));
    }
    if (cur.pos != c.blocks.size())
        throw IoError("checkpoint: trailing bytes after declared tensors");
    return ckpt;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    json header;
    header["kind"] = "dataset";
    header["alphabet"] = ds.alphabet_symbols;
    header["alphabet_hash"] = Alphabet(ds.alphabet_symbols).hash();
    header["max_len"] = ds.max_len;
    header["dictionary"] = dict_to_json(ds.dict);
    header["ids"] = ds.ids;
    header["counters"] = ds.counters;
    header["tensors"] = json::array({
        json{{"name", "indices"}, {"dtype", "i32"}, {"shape", {ds.indices.rows, ds.indices.cols}}},
        json{{"name", "mask"}, {"dtype", "u8"}, {"shape", {ds.mask.rows, ds.mask.cols}}},
        json{{"name", "labels"}, {"dtype", "u8"}, {"shape", {ds.labels.rows, ds.labels.cols}}},
    });

    std::string blocks;
    for (std::int32_t v : ds.indices.data) put_i32(blocks, v);
    blocks.append(reinterpret_cast<const char*>(ds.mask.data.data()), ds.mask.data.size());
    blocks.append(reinterpret_cast<const char*>(ds.labels.data.data()), ds.labels.data.size());

    write_file(path, finish_container(kCheckpointVersion, header, blocks));
}

Dataset load_dataset(const std::string& path) {
    Container c = open_container(path, "dataset");
    if (c.version != kCheckpointVersion)
        throw ValidationError("dataset: unsupported format version " + std::to_string(c.version));
    if (c.header.value("kind", "") != "dataset")
        throw ValidationError("dataset: file is not a dataset container: " + path);

    Dataset ds;
    ds.alphabet_symbols = c.header.at("alphabet").get<std::string>();
    ds.max_len = c.header.at("max_len").get<std::int64_t>();
    ds.dict = dict_from_json(c.header.at("dictionary"));
    ds.ids = c.header.at("ids").get<std::vector<std::string>>();
    for (const auto& [key, value] : c.header.at("counters").items())
        ds.counters[key] = value.get<std::uint64_t>();

    Cursor cur{c.blocks, 0};
    for (const auto& t : c.header.at("tensors")) {
        std::string name = t.at("name").get<std::string>();
        auto shape = t.at("shape").get<std::vector<std::int64_t>>();
        std::string dtype = t.at("dtype").get<std::string>();
        std::int64_t n = shape_elems(shape);
        if (shape.size() != 2) throw ValidationError("dataset: tensor " + name + " must be 2-D");
        if (name == "indices" && dtype == "i32") {
            ds.indices = {shape[0], shape[1], {}};
            ds.indices.data.reserve(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) ds.indices.data.push_back(cur.i32());
        } else if ((name == "mask" || name == "labels") && dtype == "u8") {
            ByteMatrix m{shape[0], shape[1], {}};
            m.data.reserve(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) m.data.push_back(cur.u8());
            (name == "mask" ? ds.mask : ds.labels) = std::move(m);
        } else {
            throw ValidationError("dataset: unexpected tensor " + name + " (" + dtype + ")");
        }
    }
    if (cur.pos != c.blocks.size())
        throw IoError("dataset: trailing bytes after declared tensors");

    std::int64_t n = static_cast<std::int64_t>(ds.ids.size());
    if (ds.indices.rows != n || ds.mask.rows != n || ds.labels.rows != n ||
        ds.labels.cols != ds.dict.size() || ds.indices.cols != ds.max_len ||
        ds.mask.cols != ds.max_len)
        throw ValidationError("dataset: inconsistent payload shapes");
    return ds;
}

}  // namespace gonet
