//! Regenerates `data/sample_corpus.jsonl`, the synthetic 500-paper corpus used
//! by the tests, the acceptance suite and the README walkthrough.
//!
//! ```text
//! cargo run -p manuscriptor-core --example gen_sample_corpus -- crates/core/data/sample_corpus.jsonl
//! ```
//!
//! Output is a pure function of the constants below.

use std::fs::File;
use std::io::{BufWriter, Write};

use manuscriptor_core::Paper;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PAPERS: usize = 500;
const SEED: u64 = 20200611;

struct Topic {
    disease: &'static str,
    organ: &'static str,
    cells: &'static str,
    terms: &'static [&'static str],
}

const TOPICS: &[Topic] = &[
    Topic {
        disease: "lung adenocarcinoma",
        organ: "lung",
        cells: "alveolar epithelial cells",
        terms: &[
            "surfactant",
            "airway",
            "bronchial",
            "pulmonary",
            "smoking",
            "ventilation",
            "nodules",
            "pleural",
        ],
    },
    Topic {
        disease: "chronic kidney disease",
        organ: "kidney",
        cells: "tubular epithelial cells",
        terms: &[
            "glomerular",
            "filtration",
            "proteinuria",
            "nephron",
            "dialysis",
            "podocytes",
            "creatinine",
            "renal",
        ],
    },
    Topic {
        disease: "hepatocellular carcinoma",
        organ: "liver",
        cells: "hepatocytes",
        terms: &[
            "cirrhosis",
            "hepatic",
            "fibrosis",
            "bile",
            "steatosis",
            "portal",
            "transaminase",
            "lobular",
        ],
    },
    Topic {
        disease: "heart failure",
        organ: "heart",
        cells: "cardiomyocytes",
        terms: &[
            "ventricular",
            "ejection",
            "cardiac",
            "myocardial",
            "arrhythmia",
            "contractility",
            "atrial",
            "hypertrophy",
        ],
    },
    Topic {
        disease: "type 2 diabetes",
        organ: "pancreas",
        cells: "beta cells",
        terms: &[
            "insulin",
            "glucose",
            "glycemic",
            "islet",
            "adipose",
            "obesity",
            "metformin",
            "resistance",
        ],
    },
    Topic {
        disease: "Alzheimer disease",
        organ: "brain",
        cells: "neurons",
        terms: &[
            "amyloid",
            "tau",
            "cognitive",
            "hippocampal",
            "dementia",
            "synaptic",
            "microglia",
            "plaques",
        ],
    },
    Topic {
        disease: "multiple sclerosis",
        organ: "spinal cord",
        cells: "oligodendrocytes",
        terms: &[
            "demyelination",
            "lesions",
            "relapsing",
            "axonal",
            "myelin",
            "neuroinflammation",
            "remission",
            "plaques",
        ],
    },
    Topic {
        disease: "breast cancer",
        organ: "breast",
        cells: "mammary epithelial cells",
        terms: &[
            "estrogen",
            "receptor",
            "mastectomy",
            "ductal",
            "tamoxifen",
            "metastatic",
            "her2",
            "lymph",
        ],
    },
    Topic {
        disease: "colorectal cancer",
        organ: "colon",
        cells: "intestinal crypt cells",
        terms: &[
            "polyps",
            "colonoscopy",
            "microbiome",
            "adenoma",
            "mucosal",
            "rectal",
            "screening",
            "stool",
        ],
    },
    Topic {
        disease: "tuberculosis",
        organ: "lung",
        cells: "macrophages",
        terms: &[
            "mycobacterium",
            "granuloma",
            "latent",
            "sputum",
            "isoniazid",
            "rifampicin",
            "infection",
            "bacilli",
        ],
    },
    Topic {
        disease: "malaria",
        organ: "blood",
        cells: "erythrocytes",
        terms: &[
            "plasmodium",
            "parasite",
            "mosquito",
            "artemisinin",
            "falciparum",
            "transmission",
            "parasitemia",
            "vector",
        ],
    },
    Topic {
        disease: "rheumatoid arthritis",
        organ: "joint",
        cells: "synovial fibroblasts",
        terms: &[
            "synovitis",
            "cartilage",
            "autoantibodies",
            "erosion",
            "methotrexate",
            "inflammatory",
            "cytokines",
            "swelling",
        ],
    },
    Topic {
        disease: "osteoporosis",
        organ: "bone",
        cells: "osteoclasts",
        terms: &[
            "fracture",
            "mineral",
            "density",
            "resorption",
            "osteoblasts",
            "calcium",
            "vertebral",
            "bisphosphonate",
        ],
    },
    Topic {
        disease: "glaucoma",
        organ: "eye",
        cells: "retinal ganglion cells",
        terms: &[
            "intraocular",
            "pressure",
            "optic",
            "retinal",
            "visual",
            "aqueous",
            "trabecular",
            "perimetry",
        ],
    },
    Topic {
        disease: "psoriasis",
        organ: "skin",
        cells: "keratinocytes",
        terms: &[
            "epidermal",
            "plaques",
            "dermal",
            "scaling",
            "biologics",
            "itch",
            "lesional",
            "cutaneous",
        ],
    },
    Topic {
        disease: "sepsis",
        organ: "blood",
        cells: "neutrophils",
        terms: &[
            "bacteremia",
            "shock",
            "lactate",
            "antibiotics",
            "organ",
            "dysfunction",
            "mortality",
            "endotoxin",
        ],
    },
    Topic {
        disease: "influenza",
        organ: "airway",
        cells: "ciliated cells",
        terms: &[
            "viral",
            "hemagglutinin",
            "vaccine",
            "strain",
            "pandemic",
            "replication",
            "neuraminidase",
            "seasonal",
        ],
    },
    Topic {
        disease: "Parkinson disease",
        organ: "midbrain",
        cells: "dopaminergic neurons",
        terms: &[
            "synuclein",
            "tremor",
            "levodopa",
            "striatal",
            "motor",
            "bradykinesia",
            "substantia",
            "dopamine",
        ],
    },
    Topic {
        disease: "asthma",
        organ: "airway",
        cells: "airway smooth muscle cells",
        terms: &[
            "eosinophils",
            "bronchoconstriction",
            "inhaled",
            "corticosteroids",
            "wheeze",
            "allergen",
            "exacerbation",
            "spirometry",
        ],
    },
    Topic {
        disease: "prostate cancer",
        organ: "prostate",
        cells: "luminal cells",
        terms: &[
            "androgen",
            "antigen",
            "gleason",
            "biopsy",
            "castration",
            "radiotherapy",
            "hormone",
            "prostatectomy",
        ],
    },
];

const METHODS: &[&str] = &[
    "RNA sequencing",
    "flow cytometry",
    "immunohistochemistry",
    "western blotting",
    "mass spectrometry",
    "a randomized controlled trial",
    "a retrospective cohort",
    "single-cell profiling",
    "CRISPR screening",
    "mouse xenografts",
    "confocal microscopy",
    "chromatin immunoprecipitation",
    "a case-control design",
];

const FIRST_NAMES: &[&str] = &[
    "Ana", "Ben", "Chen", "Dara", "Elif", "Femi", "Greta", "Hiro", "Ines", "Jonas", "Kavya",
    "Liam", "Mira", "Noah", "Olga", "Pavel", "Qing", "Rosa", "Sami", "Tara", "Uma", "Viktor",
    "Wen", "Yara",
];
const LAST_NAMES: &[&str] = &[
    "Alvarez", "Berg", "Costa", "Dubois", "Eriksen", "Fischer", "Garcia", "Hansen", "Ito",
    "Jensen", "Kowalski", "Lopez", "Meyer", "Nakamura", "Okafor", "Petrov", "Quinn", "Rossi",
    "Silva", "Tanaka", "Urban", "Varga", "Weber", "Yilmaz", "Zhang",
];
const JOURNALS: &[&str] = &[
    "Journal of Translational Medicine",
    "Clinical and Experimental Research",
    "BMC Molecular Biology",
    "Frontiers in Physiology",
    "PLoS Computational Biology",
    "Cell Reports Medicine",
    "Scientific Reports",
];

const SYLLABLES: &[&str] = &[
    "ra", "lo", "vi", "ten", "mar", "zo", "cul", "pre", "dex", "nor", "sal", "ti", "bre", "qua",
    "fen", "mo", "ky", "lin", "sor", "va", "gel", "tro", "pan", "ri",
];
const DRUG_SUFFIXES: &[&str] = &[
    "tinib", "mab", "stat", "parin", "vir", "zolam", "cillin", "olol",
];

fn gene(rng: &mut ChaCha8Rng) -> String {
    let letters: String = (0..rng.gen_range(3..5))
        .map(|_| (b'A' + rng.gen_range(0..26u8)) as char)
        .collect();
    format!("{letters}{}", rng.gen_range(1..30))
}

fn drug(rng: &mut ChaCha8Rng) -> String {
    let mut name: String = (0..rng.gen_range(2..4))
        .map(|_| *SYLLABLES.choose(rng).unwrap())
        .collect();
    name.push_str(DRUG_SUFFIXES.choose(rng).unwrap());
    name
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Subject<'a> {
    topic: &'a Topic,
    genes: Vec<String>,
    drug: String,
    method: &'static str,
    line: String,
    variant: String,
    pathway: String,
    cohort: u32,
}

fn sentence(rng: &mut ChaCha8Rng, s: &Subject) -> String {
    let g = s.genes.choose(rng).unwrap();
    let g2 = s.genes.choose(rng).unwrap();
    let t = s.topic.terms.choose(rng).unwrap();
    let t2 = s.topic.terms.choose(rng).unwrap();
    let d = &s.topic.disease;
    let o = &s.topic.organ;
    let c = &s.topic.cells;
    let v = &s.variant;
    let p = &s.pathway;
    let templates: Vec<String> = vec![
        format!("{g} expression was elevated in {c} carrying the {v} variant."),
        format!("Treatment with {} reduced {t} markers and {g} signalling through the {p} pathway.", s.drug),
        format!("We used {} to characterise {g} and {g2} in {c}.", s.method),
        format!("Loss of {g} impaired {p} responses, whereas {g2} was dispensable (Fig. {}).", rng.gen_range(1..7)),
        format!("In a cohort of {} participants, the {v} allele correlated with {g} levels.", s.cohort),
        format!("The {} cell line showed {p} activation after exposure to {}.", s.line, s.drug),
        format!("These findings link {g} and {g2} to {t} and {t2} in {d}."),
        format!("Several factors, e.g. {t} and {v}, modified the effect of {} on {g}.", s.drug),
        format!("{} was well tolerated and lowered {g} activity in the {o}.", capitalize(&s.drug)),
        format!("Compared with controls, {c} lacking {g2} displayed altered {p} signalling."),
        format!("Our data suggest that targeting {g} with {} may benefit carriers of {v}.", s.drug),
        format!("Previous work by Smith et al. described {t} in the {o}, but {g} and {p} were not examined."),
        format!("{g} binds {g2} and stabilises the {p} complex in {c}."),
    ];
    templates.choose(rng).unwrap().clone()
}

fn generic_sentence(rng: &mut ChaCha8Rng) -> &'static str {
    const GENERIC: &[&str] = &[
        "Data are presented as mean and standard deviation.",
        "Statistical significance was assessed with a two-sided test.",
        "All procedures were approved by the institutional ethics committee.",
        "Samples were processed within two hours of collection.",
        "Further studies are needed to confirm these observations.",
        "The authors declare no competing interests.",
        "Limitations include the modest sample size and single-centre design.",
    ];
    GENERIC.choose(rng).unwrap()
}

fn make_paper(rng: &mut ChaCha8Rng, i: usize) -> Paper {
    let topic = &TOPICS[rng.gen_range(0..TOPICS.len())];
    let subject = Subject {
        topic,
        genes: (0..3).map(|_| gene(rng)).collect(),
        drug: drug(rng),
        method: METHODS.choose(rng).unwrap(),
        line: format!("{}-{}", gene(rng), rng.gen_range(10..99)),
        variant: format!("rs{}", rng.gen_range(100_000..99_999_999)),
        pathway: format!(
            "{}{}",
            capitalize(&drug(rng)[..4]),
            ["in", "ase", "ogen", "ulin"].choose(rng).unwrap()
        ),
        cohort: rng.gen_range(40..4000),
    };
    let title = match rng.gen_range(0..3) {
        0 => format!(
            "{} regulates {} in {}",
            subject.genes[0],
            topic.terms[rng.gen_range(0..topic.terms.len())],
            topic.disease
        ),
        1 => format!(
            "{} targets {} signalling in {}",
            capitalize(&subject.drug),
            subject.genes[1],
            topic.cells
        ),
        _ => format!(
            "Role of {} and {} in {}",
            subject.genes[0], subject.genes[2], topic.disease
        ),
    };
    let abstract_text = (0..rng.gen_range(5..8))
        .map(|_| sentence(rng, &subject))
        .collect::<Vec<_>>()
        .join(" ");
    let mut body = Vec::new();
    for _ in 0..rng.gen_range(3..7) {
        let mut sentences = Vec::new();
        for _ in 0..rng.gen_range(3..7) {
            if rng.gen_bool(0.15) {
                sentences.push(generic_sentence(rng).to_string());
            } else {
                sentences.push(sentence(rng, &subject));
            }
        }
        body.push(sentences.join(" "));
    }
    let authors = (0..rng.gen_range(1..6))
        .map(|_| {
            format!(
                "{} {}",
                FIRST_NAMES.choose(rng).unwrap(),
                LAST_NAMES.choose(rng).unwrap()
            )
        })
        .collect();
    Paper {
        id: format!("S{:04}", i + 1),
        title,
        authors,
        journal: JOURNALS.choose(rng).unwrap().to_string(),
        year: rng.gen_range(1995..=2020),
        abstract_text,
        body,
        doi: rng
            .gen_bool(0.8)
            .then(|| format!("10.5555/sample.{:04}", i + 1)),
    }
}

fn main() -> std::io::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/data/sample_corpus.jsonl".to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out = BufWriter::new(File::create(&path)?);
    for i in 0..PAPERS {
        let paper = make_paper(&mut rng, i);
        serde_json::to_writer(&mut out, &paper)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    eprintln!("wrote {PAPERS} papers to {path}");
    Ok(())
}
