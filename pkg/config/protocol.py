"""Protocol tables: input/outcome alphabets, CHSH blocks, Bell labels, alignment pattern."""
import math

# --- Party inputs ---
# Main parties: six dichotomic settings on the Bell half, plus the Bell-state measurement.
MAIN_SETTINGS = ("0", "1", "2", "3", "4", "5")
BSM_INPUT = "bsm"
MAIN_INPUTS = MAIN_SETTINGS + (BSM_INPUT,)

# Auxiliary parties: Pauli settings sigma_0 = z, sigma_1 = x, sigma_2 = y.
AUX_SETTINGS = ("0", "1", "2")
PAULI_OF_SETTING = {"0": "z", "1": "x", "2": "y"}

# Fully network-assisted auxiliary party: parallel Bell measurements.
EVEN_PAIRING = "even"   # pairs (1,2), (3,4), ...
ODD_PAIRING = "odd"     # pairs (N,1), (2,3), ...
PAIRINGS = (EVEN_PAIRING, ODD_PAIRING)

# --- Outcomes ---
BIT_OUTCOMES = ("0", "1")
BELL_LABELS = ("00", "01", "10", "11")
BELL_STATE_NAMES = {
    "00": "phi+",
    "01": "phi-",
    "10": "psi+",
    "11": "psi-",
}
PAIR_LABEL_SEPARATOR = "."
OUTCOME_KEY_SEPARATOR = ","

# --- Bell-inequality constants ---
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
THREE_CHSH_MAX = 3.0 * TSIRELSON_BOUND

# CHSH(x1, x2; y1, y2) = <A_x1 B_y1> + <A_x1 B_y2> + <A_x2 B_y1> - <A_x2 B_y2>
CHSH_BLOCKS = {
    1: ("0", "1", "0", "1"),
    2: ("2", "3", "0", "2"),
    3: ("4", "5", "1", "2"),
}

# --- Alignment correlators (fully network-assisted) ---
# Each family combines two main settings per party: W = (A_x + s A_x') / sqrt(2).
ALIGNMENT_FAMILIES = {
    "ZZ": (("0", "1"), (1.0, 1.0)),
    "XX": (("0", "1"), (1.0, -1.0)),
    "YY": (("2", "3"), (1.0, -1.0)),
}

# Expected values of <1>, <W W> projected on one Bell label of a pair.
ALIGNMENT_PATTERN = {
    "00": {"1": 0.25, "ZZ": 0.25, "XX": 0.25, "YY": -0.25},
    "01": {"1": 0.25, "ZZ": 0.25, "XX": -0.25, "YY": 0.25},
    "10": {"1": 0.25, "ZZ": -0.25, "XX": 0.25, "YY": 0.25},
    "11": {"1": 0.25, "ZZ": -0.25, "XX": -0.25, "YY": -0.25},
}

# --- Adversary tags ---
ADVERSARY_TAGS = ("reference", "conjugate", "flagged", "isometry", "noisy")
