use std::fmt::Write as _;

use super::{MetricId, Param, SuccessCriterion, TaskError, TaskKind, TaskSpec};
use crate::sdl::lex::{is_identifier, quote, Cursor, Tok};

/// Parses a task block:
///
/// ```text
/// task { kind: classify  target: species  metric: accuracy  threshold: 0.9
///        budget_ms: 5000  seed: 42  param k: 3  data: "iris.sdl" }
/// ```
///
/// `target` takes a comma-separated list and may repeat. `metric` defaults
/// to the kind's metric, `seed` to 0.
pub fn parse_task(text: &str) -> Result<TaskSpec, TaskError> {
    let mut cur = Cursor::new(text)?;
    cur.expect_word("task")?;
    cur.expect(Tok::LBrace, "`{`")?;

    let mut kind: Option<TaskKind> = None;
    let mut targets = Vec::new();
    let mut metric: Option<MetricId> = None;
    let mut threshold = None;
    let mut budget_ms: Option<u64> = None;
    let mut seed = 0u64;
    let mut params = std::collections::BTreeMap::new();
    let mut data = None;

    loop {
        let tok = cur.next_significant("`}`")?;
        let key = match tok.tok {
            Tok::RBrace => break,
            Tok::Word(w) => w,
            _ => return Err(cur.error_here("expected a task field").into()),
        };
        if key == "param" {
            let name = cur.name("parameter name")?;
            cur.expect(Tok::Colon, "`:`")?;
            let value = match cur.next_significant("parameter value")?.tok {
                Tok::Word(w) => match w.parse::<f64>() {
                    Ok(v) => Param::Num(v),
                    Err(_) => Param::Text(w),
                },
                Tok::Str(s) => Param::Text(s),
                _ => return Err(cur.error_here("expected parameter value").into()),
            };
            params.insert(name, value);
            continue;
        }
        cur.expect(Tok::Colon, "`:`")?;
        let mut value = cur.name(&format!("value for `{key}`"))?;
        let bad = |what: &str| TaskError::Invalid(format!("bad {what} `{value}`"));
        match key.as_str() {
            "kind" => kind = Some(value.parse()?),
            "metric" => metric = Some(value.parse()?),
            "threshold" => threshold = Some(value.parse::<f64>().map_err(|_| bad("threshold"))?),
            "budget_ms" => budget_ms = Some(value.parse().map_err(|_| bad("budget_ms"))?),
            "seed" => seed = value.parse().map_err(|_| bad("seed"))?,
            "data" => data = Some(value),
            "target" | "targets" => loop {
                targets.push(std::mem::take(&mut value));
                if !cur.peek_is(&Tok::Comma) {
                    break;
                }
                cur.next();
                value = cur.name("target column")?;
            },
            other => {
                return Err(TaskError::Invalid(format!("unknown task field `{other}`")))
            }
        }
    }
    if !cur.at_end() {
        return Err(cur.error_here("trailing input after task block").into());
    }
    let kind = kind.ok_or_else(|| TaskError::Invalid("missing `kind`".into()))?;
    let metric = metric.unwrap_or_else(|| kind.default_metric());
    let spec = TaskSpec {
        kind,
        targets,
        metric,
        criterion: SuccessCriterion {
            threshold,
            direction: metric.direction(),
        },
        budget_ms: budget_ms.ok_or_else(|| TaskError::Invalid("missing `budget_ms`".into()))?,
        seed,
        params,
        data,
    };
    spec.validate()?;
    Ok(spec)
}

fn name_token(s: &str) -> String {
    if is_identifier(s) {
        s.to_string()
    } else {
        quote(s)
    }
}

/// Canonical task block, one field per line.
pub fn serialize_task(t: &TaskSpec) -> String {
    let mut out = String::from("task {\n");
    let _ = writeln!(out, "  kind: {}", t.kind);
    if !t.targets.is_empty() {
        let names: Vec<String> = t.targets.iter().map(|s| name_token(s)).collect();
        let _ = writeln!(out, "  target: {}", names.join(", "));
    }
    let _ = writeln!(out, "  metric: {}", t.metric);
    if let Some(th) = t.criterion.threshold {
        let _ = writeln!(out, "  threshold: {th:?}");
    }
    let _ = writeln!(out, "  budget_ms: {}", t.budget_ms);
    let _ = writeln!(out, "  seed: {}", t.seed);
    for (k, v) in &t.params {
        let v = match v {
            Param::Num(x) => format!("{x:?}"),
            Param::Text(s) => quote(s),
        };
        let _ = writeln!(out, "  param {}: {v}", name_token(k));
    }
    if let Some(d) = &t.data {
        let _ = writeln!(out, "  data: {}", quote(d));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::Direction;

    #[test]
    fn parses_the_reference_block() {
        let t = parse_task(
            "task { kind: classify  target: species  metric: accuracy  threshold: 0.9  budget_ms: 5000  seed: 42 }",
        )
        .unwrap();
        assert_eq!(t.kind, TaskKind::Classify);
        assert_eq!(t.targets, vec!["species"]);
        assert_eq!(t.metric, MetricId::Accuracy);
        assert_eq!(t.criterion.threshold, Some(0.9));
        assert_eq!(t.criterion.direction, Direction::HigherIsBetter);
        assert_eq!((t.budget_ms, t.seed), (5000, 42));
    }

    #[test]
    fn params_lists_and_roundtrip() {
        let text = r#"task {
  kind: optimize
  budget_ms: 100
  param objective: "(mul (sub x0 1) (sub x0 1))"
  param evals: 200
  param bounds: "-10:10"
}"#;
        let t = parse_task(text).unwrap();
        assert_eq!(t.metric, MetricId::Objective);
        assert_eq!(t.param_f64("evals"), Some(200.0));
        assert_eq!(parse_task(&serialize_task(&t)).unwrap(), t);

        let t = parse_task("task { kind: regress target: y1, y2 budget_ms: 5 }").unwrap();
        assert_eq!(t.targets, vec!["y1", "y2"]);
        assert_eq!(parse_task(&serialize_task(&t)).unwrap(), t);
    }

    #[test]
    fn rejects_bad_tasks() {
        assert!(parse_task("task { kind: classify budget_ms: 5 }").is_err());
        assert!(parse_task("task { kind: cluster metric: rmse budget_ms: 5 }").is_err());
        assert!(parse_task("task { kind: cluster }").is_err());
        assert!(parse_task("task { kind: nope budget_ms: 1 }").is_err());
        assert!(parse_task("task { kind: cluster budget_ms: 1 colour: red }").is_err());
    }
}
