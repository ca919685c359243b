"""Finite workbench for positive logic: structures and homomorphisms,
posets and filters of upsets, ordered systems, filter/prime products,
and executable checks of their preservation theorems.
"""

from .errors import (
    ChainError,
    FilterError,
    FormulaError,
    HomError,
    OrderedSystemError,
    PosetError,
    PreconditionError,
    ProductError,
    SignatureError,
    StructureError,
    WorkbenchError,
)
from .formulas import (
    And,
    App,
    Budget,
    Const,
    Eq,
    Exists,
    Falsum,
    Forall,
    Formula,
    FragmentTag,
    Implies,
    Not,
    Or,
    Rel,
    TheoryFingerprint,
    Term,
    Var,
    Verum,
    classify,
    enumerate_positive_formulas,
    enumerate_positive_sentences,
    evaluate,
    formula_size,
    free_variables,
    immersion_witness,
    is_immersion,
    is_positive,
    parse_formula,
    positive_theory,
    probe_structures,
    resultant,
    to_text,
    typecheck,
)
from .posets import (
    Filter,
    Poset,
    Upset,
    enumerate_filters,
    enumerate_prime_filters,
    filter_from_lists,
    filter_to_lists,
    generated_filter,
    id_poset,
    is_chain,
    is_filter,
    is_prime_filter,
    is_upset,
    is_wellfounded_forest,
    make_filter,
    point_filter,
    poset_from_dict,
    poset_to_dict,
    principal_upset_filter,
    upsets,
    validate_poset,
)
from .products import (
    AppendixBundle,
    ClassicalProduct,
    FilterProduct,
    appendix_transform,
    classical_reduced_product,
    classical_ultraproduct,
    filter_product,
    is_set_filter,
    is_set_ultrafilter,
    point_collapse_map,
    prime_product,
    principal_set_ultrafilter,
)
from .structures import (
    GRAPH,
    Hom,
    Signature,
    Structure,
    compose_homs,
    enumerate_homs,
    find_isomorphism,
    graph_structure,
    hom,
    identity_hom,
    is_homomorphism,
    make_structure,
    structure_to_dict,
    validate_structure,
)
from .systems import (
    ColimitResult,
    OmegaChain,
    OmegaView,
    OrderedSystem,
    Section,
    constant_system,
    denotation,
    is_coherent,
    make_omega_chain,
    make_section,
    omega_chain_from_dict,
    omega_colimit,
    omega_prime_power,
    restrict,
    sections,
    system_from_dict,
    system_to_dict,
    validate_system,
)
from .verify import (
    CoreResult,
    VerificationReport,
    core,
    is_pec,
    positively_equivalent,
    prime_power_equivalence,
    satisfies_positive_theory,
    transfer_check,
    verify_h_inductive_persistence,
    verify_los,
)

__version__ = "0.1.0"
