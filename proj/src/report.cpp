// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "exitctl/report.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>

#include "exitctl/errors.hpp"

namespace exitctl {

namespace {

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

ordered_json problem_json(const ProblemSpec& spec) {
    ordered_json j;
    j["name"] = spec.name;
    j["hash"] = hash_hex(problem_hash(spec));
    j["horizon"] = spec.horizon;
    j["dim_x"] = spec.dim_x();
    j["dim_u"] = spec.dim_u();
    return j;
}

ordered_json estimate_json(const Estimate& e) {
    ordered_json j;
    j["mean"] = e.mean;
    j["std_error"] = e.std_error;
    j["n_paths"] = e.n_paths;
    j["seed"] = e.seed;
    j["n_saturated"] = e.n_saturated;
    return j;
}

ordered_json validation_json(const ValidationReport& rep, const LipschitzEstimate& lip) {
    ordered_json j;
    j["ok"] = rep.ok();
    j["violations"] = rep.violations;
    j["k_lipschitz"] = lip.k_lip;
    j["k_growth"] = lip.k_growth;
    return j;
}

ordered_json dpp_report_json(const DppReport& rep) {
    ordered_json j;
    j["v_ref"] = rep.v_ref;
    j["eps_disc"] = rep.eps_disc;
    j["eps_opt"] = rep.eps_opt;
    j["upper_ok"] = rep.upper_ok;
    j["achieve_ok"] = rep.achieve_ok;
    j["achieved_gap"] = rep.achieved_gap;
    j["rows"] = ordered_json::array();
    for (const DppRow& row : rep.rows) {
        ordered_json r;
        r["policy"] = row.policy_id;
        r["rule"] = row.rule_id;
        r["estimate"] = row.estimate;
        r["std_error"] = row.std_error;
        r["slack"] = row.slack;
        r["upper_ok"] = row.upper_ok;
        r["n_paths"] = row.n_paths;
        r["seed"] = row.seed;
        j["rows"].push_back(std::move(r));
    }
    return j;
}

ordered_json stitch_report_json(const StitchReport& rep) {
    ordered_json j;
    j["v_ref"] = rep.v_ref;
    j["j_stitched"] = rep.j_stitched;
    j["j_stitched_std_error"] = rep.j_stitched_se;
    j["rhs"] = rep.rhs;
    j["rhs_std_error"] = rep.rhs_se;
    j["eps_decl"] = rep.eps_decl;
    j["eps_disc"] = rep.eps_disc;
    j["tol"] = rep.tol;
    j["chain_lower_ok"] = rep.chain_lower_ok;
    j["chain_upper_ok"] = rep.chain_upper_ok;
    j["n_paths"] = rep.n_paths;
    j["seed"] = rep.seed;
    return j;
}

void write_report(const std::string& path, ordered_json body, double runtime_seconds,
                  int workers) {
    ordered_json vol;
    vol["timestamp"] = utc_now();
    vol["runtime_seconds"] = runtime_seconds;
    vol["workers"] = workers;
    body["volatile"] = std::move(vol);
    std::ofstream os(path);
    if (!os) throw Error("cannot write report file: " + path);
    os << body.dump(2) << "\n";
    if (!os) throw Error("short write on report file: " + path);
}

}  // namespace exitctl
