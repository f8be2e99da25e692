"""Verdicts of the six Orlicz-condition forms on the standard battery of Phi."""

from fdboundary.phi import FORMS, exp_phi, exp_sqrt_phi, phi_condition, power_phi, tlogt_phi

BATTERY = [exp_phi(1.0), exp_phi(2.0), exp_phi(0.5), power_phi(1), power_phi(2), power_phi(5), tlogt_phi(),
           exp_sqrt_phi()]


def main() -> None:
    print(f"{'phi':<14}" + "".join(f"{f:>13}" for f in FORMS) + "   consistent")
    for phi in BATTERY:
        rep = phi_condition(phi)
        print(f"{phi.name:<14}" + "".join(f"{rep.forms[f].verdict:>13}" for f in FORMS) + f"   {rep.consistent}")


if __name__ == "__main__":
    main()
