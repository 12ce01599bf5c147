#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace wfbench {

// Registrable-domain (eTLD+1) lookup over a bundled public-suffix
// snapshot. Supports exact, wildcard (*.x) and exception (!w.x) rules.
// Domains whose TLD is not in the snapshot fall back to the default
// PSL rule (suffix = last label, eTLD+1 = last two labels).
//
// Returns nullopt for inputs with no registrable domain: empty strings,
// single labels, IP literals, or names that are themselves a suffix.
std::optional<std::string> etld_plus_one(std::string_view domain);

// True when the (lowercased) name is exactly a public suffix.
bool is_public_suffix(std::string_view domain);

}  // namespace wfbench
