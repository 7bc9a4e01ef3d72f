#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "mlmn/corpus/vocabulary.hpp"
#include "mlmn/model/mlmn.hpp"
#include "mlmn/numerics/binary_io.hpp"

namespace mlmn::model {

    // "MLMNCKPT" | u32 version | str config-json | str vocabulary-tsv | tensors
    inline constexpr char checkpoint_magic[8] = {'M', 'L', 'M', 'N', 'C', 'K', 'P', 'T'};
    inline constexpr std::uint32_t checkpoint_version = 1;

    struct LoadedModel {
        MatchModel model;
        corpus::Vocabulary vocab;
    };

    inline void save_checkpoint(std::ostream& os, const MatchModel& model, const corpus::Vocabulary& vocab) {
        binary::write_header(os, checkpoint_magic, checkpoint_version);
        binary::put_string(os, nlohmann::json(model.config()).dump());
        std::ostringstream vs;
        vocab.save(vs);
        binary::put_string(os, vs.str());
        binary::write_tensors(os, model.params());
    }

    inline void save_checkpoint(const std::string& path, const MatchModel& model, const corpus::Vocabulary& vocab) {
        binary::write_file_atomic(path, [&](std::ostream& os) { save_checkpoint(os, model, vocab); });
    }

    inline LoadedModel load_checkpoint(std::istream& is) {
        binary::read_header(is, checkpoint_magic, checkpoint_version, "an MLMN checkpoint");
        ModelConfig config;
        try {
            config = nlohmann::json::parse(binary::get_string(is)).get<ModelConfig>();
        } catch (const nlohmann::json::exception& e) {
            throw CompatibilityError(std::string("checkpoint config: ") + e.what());
        }
        std::istringstream vs(binary::get_string(is));
        auto vocab = corpus::Vocabulary::load(vs);
        auto tensors = binary::read_tensors(is);
        MatchModel model(config, binary::find_tensor(tensors, "embedding"), 0);
        binary::assign_tensors(model.params(), std::move(tensors));
        if (vocab.size() != model.params().at("embedding").value.rows()) {
            throw CompatibilityError("checkpoint vocabulary size does not match the embedding table");
        }
        return {std::move(model), std::move(vocab)};
    }

    inline LoadedModel load_checkpoint(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw InputError("cannot read checkpoint: " + path);
        return load_checkpoint(is);
    }

}  // namespace mlmn::model
