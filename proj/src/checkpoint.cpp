#include "kge/checkpoint.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace kge {

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");
static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; add byte swapping for this platform");

namespace {

std::string hash_to_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016" PRIx64, h);
    return buf;
}

std::uint64_t hex_to_hash(const std::string& s) {
    return std::strtoull(s.c_str(), nullptr, 16);
}

void write_table(std::ofstream& out, const Matrix& m) {
    out.write(reinterpret_cast<const char*>(m.a.data()),
              static_cast<std::streamsize>(m.a.size() * sizeof(double)));
}

void read_table(std::ifstream& in, Matrix& m, const std::string& path) {
    in.read(reinterpret_cast<char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(m.a.size() * sizeof(double))) {
        throw std::runtime_error("truncated checkpoint: " + path);
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, std::uint64_t vocab_hash,
                     int epochs) {
    nlohmann::json header;
    header["format"] = "kge-checkpoint";
    header["version"] = 1;
    header["model"] = to_string(model.cfg.kind);
    header["dim"] = model.cfg.dim;
    header["keci_p"] = model.cfg.keci_p;
    header["keci_q"] = model.cfg.keci_q;
    header["qmult_normalize"] = model.cfg.qmult_normalize;
    header["num_entities"] = model.cfg.num_entities;
    header["num_relations"] = model.cfg.num_relations;
    header["entity_dim"] = model.cfg.entity_dim();
    header["relation_dim"] = model.cfg.relation_dim();
    header["vocab_hash"] = hash_to_hex(vocab_hash);
    header["epochs"] = epochs;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << header.dump() << '\n';
    write_table(out, model.ent);
    write_table(out, model.rel);
    out.flush();
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("missing checkpoint header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("corrupt checkpoint header in " + path + ": " + e.what());
    }
    if (header.value("format", "") != "kge-checkpoint" || header.value("version", 0) != 1) {
        throw std::runtime_error("unrecognized checkpoint format: " + path);
    }

    ModelConfig cfg;
    cfg.kind = model_kind_from_string(header.at("model").get<std::string>());
    cfg.dim = header.at("dim").get<int>();
    cfg.keci_p = header.at("keci_p").get<int>();
    cfg.keci_q = header.at("keci_q").get<int>();
    cfg.qmult_normalize = header.at("qmult_normalize").get<bool>();
    cfg.num_entities = header.at("num_entities").get<std::int32_t>();
    cfg.num_relations = header.at("num_relations").get<std::int32_t>();
    cfg.validate();
    if (header.at("entity_dim").get<int>() != cfg.entity_dim() ||
        header.at("relation_dim").get<int>() != cfg.relation_dim()) {
        throw std::runtime_error("checkpoint table shapes disagree with the model kind: " + path);
    }

    Checkpoint ck;
    ck.model = Model(cfg);
    ck.vocab_hash = hex_to_hash(header.at("vocab_hash").get<std::string>());
    ck.epochs = header.at("epochs").get<int>();
    read_table(in, ck.model.ent, path);
    read_table(in, ck.model.rel, path);
    char extra;
    if (in.read(&extra, 1).gcount() != 0) {
        throw std::runtime_error("trailing bytes after checkpoint tables: " + path);
    }
    return ck;
}

Model load_checkpoint_for(const std::string& path, std::uint64_t expected_vocab_hash) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.vocab_hash != expected_vocab_hash) {
        throw std::runtime_error("checkpoint vocab hash mismatch: " + path +
                                 " was trained on a different dictionary");
    }
    return std::move(ck.model);
}

}  // namespace kge
