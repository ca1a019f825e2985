// Generated reference vectors for (master_seed = 42, label = "ep:0/pop").
// Mirrors docs/rng.md.
const SEED_HEX_42_EP0_POP: &str =
    "0f2dff2fe6a62f8af485370a01a6c2a33d9dce90832f03cbafcdedfbbe32369d";
const FIRST_U64_42_EP0_POP: &[u64] = &[
    11733377357806652255,
    1385348538460763224,
    12157763535831271723,
    3066265488030461454,
    14563862631073160777,
    13959944037298017392,
    429032823234495051,
    4650887512068922576,
];
