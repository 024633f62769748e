#pragma once

// Internal unit system: hbar = 1, energies in eV, times in 1/eV.
// File interfaces and the CLI speak femtoseconds; conversion happens at the
// boundary and nowhere else.

namespace brls {

inline constexpr double hbar_ev_fs = 0.6582119569;

inline constexpr double fs_to_internal(double t_fs) { return t_fs / hbar_ev_fs; }
inline constexpr double internal_to_fs(double t) { return t * hbar_ev_fs; }

}  // namespace brls
