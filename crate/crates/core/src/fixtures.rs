//! The bundled weather fixture corpus: 50 records over the seven-template
//! registry, with annotated references synthesized from a second,
//! differently-phrased registry so references never coincide with the
//! template-guided inputs.

use std::io::Cursor;

use crate::corpus::CorpusRecord;
use crate::mr_tree::parse_mr;
use crate::splits::Example;
use crate::template_engine::{load_registry, RenderMode, TemplateRegistry};

/// Input-side registry, one template per node label or helper.
pub const WEATHER_TEMPLATES_TSV: &str = include_str!("../../../fixtures/weather.templates.tsv");

/// Response-side registry used only to synthesize fixture references.
pub const WEATHER_RESPONSES_TSV: &str = include_str!("../../../fixtures/weather.responses.tsv");

pub fn weather_registry() -> TemplateRegistry {
    load_registry(Cursor::new(WEATHER_TEMPLATES_TSV)).expect("bundled registry parses")
}

pub fn weather_response_registry() -> TemplateRegistry {
    load_registry(Cursor::new(WEATHER_RESPONSES_TSV)).expect("bundled response registry parses")
}

/// The showcase record: a refusal justified by a weather report, exercising
/// every template in the registry.
pub const SHOWCASE_ID: &str = "w01";

pub fn showcase_mr() -> String {
    let jacket = recommend("jacket", Some("today"), Some(Loc::City("Palo Alto")));
    let rain = inform(
        "light rain",
        Some("extremely humid"),
        Some("today"),
        Some(Loc::City("Palo Alto")),
    );
    format!("{} {}", no(), justify(&jacket, &rain))
}

#[derive(Clone, Copy)]
enum Loc {
    Plain(&'static str),
    City(&'static str),
}

impl Loc {
    fn to_mr(self) -> String {
        match self {
            Loc::Plain(name) => format!("[LOCATION {name} ]"),
            Loc::City(name) => format!("[LOCATION [CITY {name} ] ]"),
        }
    }
}

fn no() -> String {
    "[DG_NO ]".to_string()
}

fn inform(
    condition: &str,
    humidity: Option<&str>,
    date_time: Option<&str>,
    location: Option<Loc>,
) -> String {
    let mut parts = vec![format!("[CONDITION {condition} ]")];
    if let Some(h) = humidity {
        parts.push(format!("[HUMIDITY {h} ]"));
    }
    push_when_where(&mut parts, date_time, location);
    format!("[DG_INFORM {} ]", parts.join(" "))
}

fn inform_not(condition_not: &str, date_time: Option<&str>, location: Option<Loc>) -> String {
    let mut parts = vec![format!("[CONDITION_NOT {condition_not} ]")];
    push_when_where(&mut parts, date_time, location);
    format!("[DG_INFORM {} ]", parts.join(" "))
}

fn recommend(attire_not: &str, date_time: Option<&str>, location: Option<Loc>) -> String {
    let mut parts = vec![format!("[ATTIRE_NOT {attire_not} ]")];
    push_when_where(&mut parts, date_time, location);
    format!("[DG_RECOMMEND {} ]", parts.join(" "))
}

fn justify(first: &str, second: &str) -> String {
    format!("[DS_JUSTIFY {first} {second} ]")
}

fn push_when_where(parts: &mut Vec<String>, date_time: Option<&str>, location: Option<Loc>) {
    if let Some(d) = date_time {
        parts.push(format!("[DATE_TIME {d} ]"));
    }
    if let Some(l) = location {
        parts.push(l.to_mr());
    }
}

/// The 50 fixture records as (id, query, linearized MR).
fn weather_rows() -> Vec<(&'static str, &'static str, String)> {
    use Loc::{City, Plain};
    let pa = || Some(City("Palo Alto"));
    let mp = || Some(City("Menlo Park"));
    let sf = || Some(City("San Francisco"));
    let ox = || Some(Plain("Oxford"));
    let bh = || Some(Plain("Birmingham"));

    vec![
        ("w01", "Should I wear a jacket today?", showcase_mr()),
        ("w02", "Will it rain today in Palo Alto?", inform("light rain", None, Some("today"), pa())),
        ("w03", "What's tomorrow looking like in Oxford?", inform("heavy snow", None, Some("tomorrow"), ox())),
        ("w04", "How is the evening shaping up?", inform("fog", None, Some("this evening"), None)),
        ("w05", "Anything severe around Birmingham?", inform("thunderstorms", None, None, bh())),
        ("w06", "How's the sky?", inform("partly cloudy skies", None, None, None)),
        ("w07", "What's the weather in Menlo Park today?", inform("sunshine", Some("very dry"), Some("today"), mp())),
        ("w08", "Do I need anything for tomorrow?", inform("drizzle", Some("extremely humid"), Some("tomorrow"), None)),
        ("w09", "Is hail possible near Oxford?", inform("hail", Some("extremely humid"), None, ox())),
        ("w10", "Is it muggy out?", inform("light rain", Some("very dry"), None, None)),
        ("w11", "Is it snowing in San Francisco today?", format!("{} {}", no(), inform("heavy snow", None, Some("today"), sf()))),
        ("w12", "Will the fog lift by 5?", format!("{} {}", no(), inform("fog", None, Some("5 pm"), None))),
        ("w13", "Storms at 3 in Oxford?", format!("{} {}", no(), inform("thunderstorms", Some("extremely humid"), Some("03:00 PM"), ox()))),
        ("w14", "Is it dry in Palo Alto?", format!("{} {}", no(), inform("drizzle", None, None, pa()))),
        ("w15", "Is it cloudy?", format!("{} {}", no(), inform("sunshine", None, None, None))),
        ("w16", "Clear skies at noon in Birmingham?", format!("{} {}", no(), inform("partly cloudy skies", Some("very dry"), Some("noon"), bh()))),
        ("w17", "Should I wear a heavy jacket Wednesday?", format!("{} {}", no(), justify(&recommend("jacket", Some("next Wednesday"), None), &inform_not("cold", Some("next Wednesday"), None)))),
        ("w18", "Do I need an umbrella today?", format!("{} {}", no(), justify(&recommend("umbrella", Some("today"), pa()), &inform_not("rain", Some("today"), pa())))),
        ("w19", "Heavy coat for Oxford?", format!("{} {}", no(), justify(&recommend("heavy coat", None, ox()), &inform_not("snow", None, ox())))),
        ("w20", "Umbrella tomorrow?", format!("{} {}", no(), justify(&recommend("umbrella", Some("tomorrow"), None), &inform_not("rain", Some("tomorrow"), None)))),
        ("w21", "Jacket or no jacket?", format!("{} {}", no(), justify(&recommend("jacket", None, None), &inform_not("cold", None, None)))),
        ("w22", "Coat for this evening in Menlo Park?", format!("{} {}", no(), justify(&recommend("heavy coat", Some("this evening"), mp()), &inform_not("hail", Some("this evening"), mp())))),
        ("w23", "Umbrella for Birmingham today?", justify(&recommend("umbrella", Some("today"), bh()), &inform_not("rain", Some("today"), bh()))),
        ("w24", "Jacket for tomorrow?", justify(&recommend("jacket", Some("tomorrow"), None), &inform_not("cold", Some("tomorrow"), None))),
        ("w25", "Jacket today in Palo Alto?", justify(&recommend("jacket", Some("today"), pa()), &inform("light rain", Some("extremely humid"), Some("today"), pa()))),
        ("w26", "Umbrella in San Francisco?", justify(&recommend("umbrella", None, sf()), &inform("heavy snow", None, None, sf()))),
        ("w27", "Coat next Wednesday?", justify(&recommend("heavy coat", Some("next Wednesday"), None), &inform("sunshine", None, Some("next Wednesday"), None))),
        ("w28", "Is it cold in Palo Alto today?", inform_not("cold", Some("today"), pa())),
        ("w29", "Rain at 3 PM?", inform_not("rain", Some("03:00 PM"), None)),
        ("w30", "Snow around Oxford?", inform_not("snow", None, ox())),
        ("w31", "Rain at 7 tonight in Palo Alto?", inform("light rain", None, Some("07:00 PM"), pa())),
        ("w32", "Snow at 5 in Birmingham?", inform("heavy snow", None, Some("5 pm"), bh())),
        ("w33", "Foggy tomorrow?", inform("fog", None, Some("tomorrow"), None)),
        ("w34", "Sunny in Oxford?", inform("sunshine", None, None, ox())),
        ("w35", "Any drizzle?", inform("drizzle", None, None, None)),
        ("w36", "Hail at noon in Menlo Park?", inform("hail", Some("extremely humid"), Some("noon"), mp())),
        ("w37", "Storms today?", inform("thunderstorms", Some("very dry"), Some("today"), None)),
        ("w38", "Clouds over Birmingham?", inform("partly cloudy skies", Some("very dry"), None, bh())),
        ("w39", "Rain tomorrow in Menlo Park?", format!("{} {}", no(), inform("light rain", None, Some("tomorrow"), mp()))),
        ("w40", "Sun at noon?", format!("{} {}", no(), inform("sunshine", None, Some("noon"), None))),
        ("w41", "Umbrella today then?", format!("{} {}", no(), justify(&recommend("umbrella", Some("today"), None), &inform_not("rain", Some("today"), None)))),
        ("w42", "Jacket this evening in Oxford?", format!("{} {}", no(), justify(&recommend("jacket", Some("this evening"), Some(City("Oxford"))), &inform_not("cold", Some("this evening"), Some(City("Oxford")))))),
        ("w43", "Coat tomorrow in Oxford?", justify(&recommend("heavy coat", Some("tomorrow"), ox()), &inform_not("snow", Some("tomorrow"), ox()))),
        ("w44", "Hail in San Francisco today?", inform_not("hail", Some("today"), sf())),
        ("w45", "Rain today in Menlo Park?", inform("light rain", None, Some("today"), mp())),
        ("w46", "Fog at 5?", inform("fog", None, Some("5 pm"), None)),
        ("w47", "Drizzle today in Palo Alto?", format!("{} {}", no(), inform("drizzle", None, Some("today"), pa()))),
        ("w48", "Snow and humidity in Oxford today?", inform("heavy snow", Some("extremely humid"), Some("today"), ox())),
        ("w49", "Hail at 3 in Birmingham?", format!("{} {}", no(), inform("hail", Some("very dry"), Some("03:00 PM"), bh()))),
        ("w50", "Umbrella today in Palo Alto?", justify(&recommend("umbrella", Some("today"), pa()), &inform("drizzle", None, Some("today"), pa()))),
    ]
}

/// Wire-format corpus: references rendered from the response registry.
pub fn weather_corpus_records() -> Vec<CorpusRecord> {
    let responses = weather_response_registry();
    weather_rows()
        .into_iter()
        .map(|(id, query, mr)| {
            let tree = parse_mr(&mr).expect("fixture MR parses");
            let reference = responses
                .render(&tree, RenderMode::Annotated)
                .expect("fixture reference renders");
            CorpusRecord {
                id: id.to_string(),
                query: query.to_string(),
                mr,
                reference,
                schema_tag: None,
            }
        })
        .collect()
}

/// Fully-hydrated corpus: MRs parsed and template texts rendered with the
/// input registry.
pub fn weather_corpus() -> Vec<Example> {
    let registry = weather_registry();
    weather_corpus_records()
        .into_iter()
        .map(|record| {
            let mr = parse_mr(&record.mr).expect("fixture MR parses");
            let template_text = registry
                .render(&mr, RenderMode::Plain)
                .expect("fixture template text renders");
            Example {
                id: record.id,
                query: record.query,
                mr,
                template_text,
                reference: record.reference,
                schema_tag: record.schema_tag,
            }
        })
        .collect()
}
