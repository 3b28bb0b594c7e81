#include "tminimax/types.hpp"

#include <algorithm>
#include <charconv>

namespace tminimax {

ArmId ArmId::pulse(int t) {
    if (t < 2) throw InvalidArm("pulse arm must start at period 2 or later, got " + std::to_string(t));
    return ArmId(Kind::Pulse, t);
}

ArmId ArmId::from_index(int index) {
    if (index == 0) return control();
    if (index == 1) return treated();
    return pulse(index);
}

bool ArmId::valid_for(int T) const noexcept {
    return kind_ != Kind::Pulse || (index_ >= 2 && index_ <= T);
}

std::string ArmId::key() const {
    switch (kind_) {
    case Kind::AlwaysControl: return "always0";
    case Kind::AlwaysTreated: return "always1";
    case Kind::Pulse: break;
    }
    return "pulse_" + std::to_string(index_);
}

ArmId ArmId::from_key(std::string_view key) {
    if (key == "always0") return control();
    if (key == "always1") return treated();
    constexpr std::string_view prefix = "pulse_";
    if (key.substr(0, prefix.size()) == prefix) {
        const auto digits = key.substr(prefix.size());
        int t = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) return pulse(t);
    }
    throw InvalidArm("unknown arm key '" + std::string(key) + "'");
}

AssignmentVector make_arm_vector(ArmId arm, int T, ArmFamily family) {
    if (T < 1) throw DomainError("horizon T must be positive");
    if (!arm.valid_for(T))
        throw InvalidArm("pulse index " + std::to_string(arm.time()) + " outside 2.." + std::to_string(T));
    AssignmentVector bits(static_cast<std::size_t>(T), 0);
    switch (arm.kind()) {
    case ArmId::Kind::AlwaysControl: break;
    case ArmId::Kind::AlwaysTreated: std::fill(bits.begin(), bits.end(), 1); break;
    case ArmId::Kind::Pulse:
        if (family == ArmFamily::Pulse) {
            bits[static_cast<std::size_t>(arm.time() - 1)] = 1;
        } else {
            for (int s = arm.time(); s <= T; ++s) bits[static_cast<std::size_t>(s - 1)] = 1;
        }
        break;
    }
    return bits;
}

RealAllocation to_real(const Allocation& alloc) {
    std::vector<double> v(alloc.counts().begin(), alloc.counts().end());
    return RealAllocation(std::move(v));
}

}  // namespace tminimax
