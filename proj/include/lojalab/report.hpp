#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "lojalab/curve.hpp"
#include "lojalab/kinf.hpp"
#include "lojalab/levelset.hpp"
#include "lojalab/lojafit.hpp"
#include "lojalab/registry.hpp"

namespace lojalab {

using Json = nlohmann::json;

std::string variant_name(SweepVariant v);
std::string variant_name(WitnessVariant v);

Json to_json(const PowerLaw& law);
Json to_json(const SweepRecord& rec);
Json to_json(const CandidateValueSet& set);
Json to_json(const WitnessReport& rep);
Json to_json(const ProjectionResult& res);
Json to_json(const MalgrangeCertificate& cert);
Json to_json(const LojaFitResult& res, const std::string& function_id);
Json to_json(const FailureCertificate& cert, const std::string& function_id,
             const std::vector<std::string>& curve_components);
Json to_json(const ExampleEntry& e);

// CSV bodies; headers are stable
std::string sweep_csv(const std::vector<SweepRecord>& records);
std::string ratio_trace_csv(const FailureCertificate& cert);

// write-temp-then-rename
void atomic_write(const std::filesystem::path& path, const std::string& content);

} // namespace lojalab
