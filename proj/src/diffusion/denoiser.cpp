#include "ooc/diffusion/denoiser.hpp"

#include "ooc/util/errors.hpp"

namespace ooc::diff {

const char* cond_mode_name(CondMode m) {
    switch (m) {
        case CondMode::none: return "none";
        case CondMode::concat: return "concat";
        case CondMode::attention: return "attention";
    }
    throw ContractError("unknown conditioning mode value");
}

CondMode cond_mode_from_name(const std::string& s) {
    if (s == "none") return CondMode::none;
    if (s == "concat") return CondMode::concat;
    if (s == "attention") return CondMode::attention;
    throw ContractError("unknown conditioning mode '" + s + "'");
}

}  // namespace ooc::diff
