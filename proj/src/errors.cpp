#include "dispwave/errors.hpp"

#include <algorithm>

namespace dispwave
{
    const char* to_string(ErrorCode code)
    {
        switch (code)
        {
        case ErrorCode::domain: return "domain";
        case ErrorCode::accuracy: return "accuracy";
        case ErrorCode::capacity: return "capacity";
        case ErrorCode::assembly: return "assembly";
        case ErrorCode::feshbach_l00_singular: return "feshbach_l00_singular";
        case ErrorCode::feshbach_schur_singular: return "feshbach_schur_singular";
        case ErrorCode::zero_potential: return "zero_potential";
        case ErrorCode::near_singular: return "near_singular";
        case ErrorCode::spectral_assumption_violated: return "spectral_assumption_violated";
        case ErrorCode::configuration: return "configuration";
        case ErrorCode::instability: return "instability";
        case ErrorCode::divergence: return "divergence";
        case ErrorCode::numeric: return "numeric";
        }
        return "unknown";
    }

    Warnings& Warnings::instance()
    {
        static Warnings sink;
        return sink;
    }

    void Warnings::add(const std::string& category, const std::string& message)
    {
        std::lock_guard lock(mutex_);
        entries_.emplace_back(category, message);
    }

    std::vector<std::string> Warnings::drain()
    {
        std::lock_guard lock(mutex_);
        std::vector<std::string> out;
        out.reserve(entries_.size());
        for (const auto& [cat, msg] : entries_)
            out.push_back(cat + ": " + msg);
        entries_.clear();
        return out;
    }

    std::size_t Warnings::count(const std::string& category) const
    {
        std::lock_guard lock(mutex_);
        return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(),
            [&](const auto& e) { return e.first == category; }));
    }
} // namespace dispwave
