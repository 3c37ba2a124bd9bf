#include "ooc/diffusion/checkpoint.hpp"

#include <zlib.h>

#include <cstdint>
#include <fstream>

#include "ooc/util/errors.hpp"

namespace ooc::diff {

namespace {

uint32_t blob_crc(const std::vector<float>& w) {
    uLong c = crc32(0L, Z_NULL, 0);
    return static_cast<uint32_t>(
        crc32(c, reinterpret_cast<const Bytef*>(w.data()), static_cast<uInt>(w.size() * 4)));
}

}  // namespace

void save_checkpoint(const std::string& stem, const DenoiserConfig& arch,
                     const NoiseSchedule& sched, const data::Normalizer& norm, int d_state,
                     const std::vector<float>& weights, const nlohmann::json& train_info) {
    // layout metadata comes from a throwaway instance so the manifest always
    // matches what load_checkpoint will rebuild
    Denoiser<float> probe(arch);
    if (probe.params().total() != weights.size())
        throw ContractError("checkpoint: weight vector does not match the architecture (" +
                            std::to_string(weights.size()) + " vs " +
                            std::to_string(probe.params().total()) + ")");

    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : probe.params().entries())
        entries.push_back({{"name", e.name}, {"count", e.count}});

    nlohmann::json j{
        {"format", "ooc-denoiser-v1"},
        {"arch",
         {{"d", arch.d},
          {"horizon", arch.horizon},
          {"base", arch.base},
          {"mults", arch.mults},
          {"cond_mode", cond_mode_name(arch.mode)},
          {"cond_tokens", arch.cond_tokens},
          {"cond_dim", arch.cond_dim},
          {"vocab", arch.vocab}}},
        {"schedule", {{"T", sched.T}, {"beta_min", sched.beta_min}, {"beta_max", sched.beta_max}}},
        {"normalizer", {{"min", norm.mins()}, {"max", norm.maxs()}}},
        {"d_state", d_state},
        {"train", train_info},
        {"params",
         {{"count", weights.size()}, {"crc32", blob_crc(weights)}, {"entries", entries}}}};

    std::ofstream jf(stem + ".json");
    if (!jf) throw LoadError("checkpoint: cannot write " + stem + ".json");
    jf << j.dump(1) << "\n";
    jf.close();

    std::ofstream bf(stem + ".bin", std::ios::binary);
    if (!bf) throw LoadError("checkpoint: cannot write " + stem + ".bin");
    bf.write(reinterpret_cast<const char*>(weights.data()),
             static_cast<std::streamsize>(weights.size() * 4));
    if (!bf) throw LoadError("checkpoint: short write to " + stem + ".bin");
}

LoadedModel load_checkpoint(const std::string& stem) {
    std::ifstream jf(stem + ".json");
    if (!jf) throw LoadError("checkpoint: cannot open " + stem + ".json");
    nlohmann::json j;
    try {
        jf >> j;
    } catch (const nlohmann::json::exception& e) {
        throw LoadError("checkpoint: bad manifest " + stem + ".json: " + e.what());
    }
    if (j.value("format", "") != "ooc-denoiser-v1")
        throw LoadError("checkpoint: unrecognized format in " + stem + ".json");

    DenoiserConfig arch;
    try {
        const auto& a = j.at("arch");
        arch.d = a.at("d").get<int>();
        arch.horizon = a.at("horizon").get<int>();
        arch.base = a.at("base").get<int>();
        arch.mults = a.at("mults").get<std::vector<int>>();
        arch.mode = cond_mode_from_name(a.at("cond_mode").get<std::string>());
        arch.cond_tokens = a.at("cond_tokens").get<int>();
        arch.cond_dim = a.at("cond_dim").get<int>();
        arch.vocab = a.at("vocab").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError("checkpoint: incomplete arch in " + stem + ".json: " + e.what());
    }

    LoadedModel out;
    out.model = std::make_unique<Denoiser<float>>(arch);
    auto& ps = out.model->params();

    const auto& p = j.at("params");
    size_t count = p.at("count").get<size_t>();
    if (count != ps.total())
        throw LoadError("checkpoint: parameter count mismatch in " + stem + ".json (" +
                        std::to_string(count) + " vs rebuilt " + std::to_string(ps.total()) + ")");
    const auto& ents = p.at("entries");
    if (ents.size() != ps.entries().size())
        throw LoadError("checkpoint: parameter table size mismatch in " + stem + ".json");
    for (size_t i = 0; i < ents.size(); ++i) {
        const auto& mine = ps.entries()[i];
        if (ents[i].at("name").get<std::string>() != mine.name ||
            ents[i].at("count").get<size_t>() != mine.count)
            throw LoadError("checkpoint: parameter table entry " + std::to_string(i) +
                            " mismatch in " + stem + ".json (expected " + mine.name + ")");
    }

    std::ifstream bf(stem + ".bin", std::ios::binary | std::ios::ate);
    if (!bf) throw LoadError("checkpoint: cannot open " + stem + ".bin");
    auto bytes = static_cast<size_t>(bf.tellg());
    if (bytes != count * 4)
        throw LoadError("checkpoint: " + stem + ".bin is " + std::to_string(bytes) +
                        " bytes, expected " + std::to_string(count * 4));
    bf.seekg(0);
    bf.read(reinterpret_cast<char*>(ps.values.data()), static_cast<std::streamsize>(bytes));
    if (!bf) throw LoadError("checkpoint: short read from " + stem + ".bin");
    if (blob_crc(ps.values) != p.at("crc32").get<uint32_t>())
        throw LoadError("checkpoint: crc32 mismatch for " + stem + ".bin");

    const auto& s = j.at("schedule");
    out.sched = build_schedule(s.at("T").get<int>(), s.at("beta_min").get<double>(),
                               s.at("beta_max").get<double>());
    const auto& nz = j.at("normalizer");
    out.norm = data::Normalizer(nz.at("min").get<std::vector<double>>(),
                                nz.at("max").get<std::vector<double>>());
    out.d_state = j.at("d_state").get<int>();
    out.train_info = j.value("train", nlohmann::json::object());
    return out;
}

}  // namespace ooc::diff
