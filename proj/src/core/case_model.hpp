#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace gridmask {

using cplx = std::complex<double>;

enum class BusKind { PQ = 1, PV = 2, Slack = 3 };

// All indices are 0-based internally. External (case file) bus numbers are
// kept in ext_id; user-facing output reports 1-based ids.
struct Bus {
    int ext_id = 0;
    BusKind kind = BusKind::PQ;
    cplx load;              // MVA, as read; see load_pu()
    double voltage_setpoint = 1.0;
    bool has_generator = false;
    double gen_p = 0.0;     // per-unit, summed over in-service generators
    double vmax = 1.05;
    double vmin = 0.95;
    double base_kv = 0.0;

    bool operator==(const Bus&) const = default;
};

struct Generator {
    int bus = 0;
    double pg = 0.0;  // MW
    double qg = 0.0;  // MVAr
    double vg = 1.0;
    double pmax = 0.0;
    double pmin = 0.0;
    bool in_service = true;

    bool operator==(const Generator&) const = default;
};

struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_charging = 0.0;  // kept for round trips, not used electrically
    double rating = 0.0;      // MW; +inf when the source has no limit
    double tap = 0.0;         // raw tap column
    double shift = 0.0;
    bool is_transformer = false;
    bool is_protected = false;

    cplx z() const { return {r, x}; }
    cplx y() const { return 1.0 / z(); }
    bool operator==(const Branch&) const = default;
};

struct Network {
    std::string name;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> gens;
    int reference_bus = -1;

    int n_b() const { return static_cast<int>(buses.size()); }
    int n_br() const { return static_cast<int>(branches.size()); }
    int bus_index(int ext_id) const;  // -1 if absent

    cplx load_pu(int bus) const { return buses[bus].load / base_mva; }

    bool operator==(const Network& o) const {
        return name == o.name && base_mva == o.base_mva && buses == o.buses &&
               branches == o.branches && gens == o.gens && reference_bus == o.reference_bus;
    }
};

struct Incidence {
    int branch;
    int other;
};

Network parse_case(const std::string& text);
Network load_case(const std::string& path);
std::string serialize_case(const Network& net);

void set_protected(Network& net, const std::vector<int>& branch_ids);

// Raw connectivity check, usable on partially built networks.
bool is_connected(int n_b, const std::vector<std::pair<int, int>>& edges);

bool is_islanding(const Network& net, int l);
std::vector<Incidence> neighbors(const Network& net, int bus);
std::vector<std::vector<Incidence>> adjacency(const Network& net);

// A generator bus holds an in-service unit able to produce real power.
bool is_generator_bus(const Network& net, int bus);

}  // namespace gridmask
