#include "covar/verify.hpp"

#include <cmath>
#include <cstdio>

namespace covar {

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace

std::string to_string(Status status) {
    switch (status) {
        case Status::Pass: return "pass";
        case Status::Fail: return "fail";
        case Status::Inconclusive: return "inconclusive";
    }
    return "";
}

void Report::add(std::string id, double residual, std::string note) {
    CaseRecord r{std::move(id), residual, Status::Pass, std::move(note)};
    if (!(residual <= tolerance)) r.status = Status::Fail;
    if (!std::isnan(residual)) worst_residual = std::max(worst_residual, residual);
    if (r.status == Status::Fail) status = Status::Fail;
    details.push_back(std::move(r));
}

void Report::add_inconclusive(std::string id, std::string note) {
    details.push_back({std::move(id), 0, Status::Inconclusive, std::move(note)});
    if (status == Status::Pass) status = Status::Inconclusive;
}

bool Report::ok() const { return expected_failure ? status == Status::Fail : status == Status::Pass; }

std::string to_text(const Report& r) {
    std::string out;
    out += "check = " + r.check + "\n";
    out += "subject = " + r.subject + "\n";
    out += "status = " + to_string(r.status) + "\n";
    out += "expected = " + std::string(r.expected_failure ? "fail" : "pass") + "\n";
    out += "outcome = " + std::string(r.ok() ? "ok" : "unexpected") + "\n";
    out += "worst_residual = " + sci(r.worst_residual) + "\n";
    out += "tolerance = " + sci(r.tolerance) + "\n";
    out += "samples = " + std::to_string(r.samples) + "\n";
    out += "seed = " + std::to_string(r.seed) + "\n";
    for (const auto& c : r.details) {
        out += "case." + c.id + " = " + sci(c.residual) + " " + to_string(c.status);
        if (!c.note.empty()) out += " (" + c.note + ")";
        out += "\n";
    }
    return out;
}

std::string to_records(const Report& r) {
    std::string out;
    for (const auto& c : r.details) {
        out += r.check + "\t" + r.subject + ":" + c.id + "\t" + sci(c.residual) + "\t" + to_string(c.status);
        if (r.expected_failure) out += "\texpected-fail";
        out += "\n";
    }
    return out;
}

}  // namespace covar
