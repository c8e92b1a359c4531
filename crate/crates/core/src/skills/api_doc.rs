use super::{Param, ParamType, SkillKind, SkillLibrary};

const BUILTIN_API: &str = include_str!("builtin_api.txt");

/// A builtin's header (possibly wrapped over lines) and its docstring body.
#[derive(Clone, Debug, PartialEq)]
pub struct BuiltinDoc {
    pub name: String,
    pub header: String,
    pub body: String,
    pub params: Vec<Param>,
}

fn param_type(name: &str) -> ParamType {
    match name {
        "object_ids" => ParamType::ObjectIdList,
        "position" => ParamType::Position3,
        n if n.ends_with("object_id") || n.starts_with("object_id") => ParamType::ObjectId,
        _ => ParamType::String,
    }
}

fn parse_params(header: &str) -> Vec<Param> {
    let inner = header.split_once('(').and_then(|(_, r)| r.rsplit_once(')')).map(|(p, _)| p).unwrap_or("");
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            let (name, default) = match p.split_once('=') {
                Some((n, d)) => (n.trim(), Some(d.trim())),
                None => (p, None),
            };
            Param { name: name.to_string(), ty: param_type(name), optional: default.is_some() }
        })
        .collect()
}

/// Builtin documentation in library order.
pub fn builtin_docs() -> Vec<BuiltinDoc> {
    let mut docs: Vec<BuiltinDoc> = vec![];
    let mut lines = BUILTIN_API.lines().peekable();
    while let Some(line) = lines.next() {
        if line.is_empty() || line.starts_with(' ') {
            continue;
        }
        let mut header = line.to_string();
        while !header.trim_end().ends_with(')') {
            match lines.next() {
                Some(l) => {
                    header.push('\n');
                    header.push_str(l);
                }
                None => break,
            }
        }
        let mut body: Vec<&str> = vec![];
        while let Some(l) = lines.peek() {
            if !l.is_empty() && !l.starts_with(' ') {
                break;
            }
            body.push(lines.next().expect("peeked"));
        }
        while body.last().is_some_and(|l| l.is_empty()) {
            body.pop();
        }
        let name = header.split('(').next().unwrap_or("").trim().to_string();
        let params = parse_params(&header.replace('\n', " "));
        docs.push(BuiltinDoc { name, header, body: body.join("\n"), params });
    }
    docs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocDetail {
    NameOnly,
    NameAndDocstring,
}

fn indent(text: &str) -> String {
    text.lines()
        .map(|l| if l.is_empty() { String::new() } else { format!("    {l}") })
        .collect::<Vec<_>>()
        .join("\n")
}

/// API listing for the planner prompt. `hide` drops skills by name (the
/// baseline hides `learn_skill`).
pub fn render_api_doc(library: &SkillLibrary, detail: DocDetail, hide: &[&str]) -> String {
    let builtins = builtin_docs();
    let mut blocks = vec![];
    for r in library.records() {
        if hide.contains(&r.name.as_str()) {
            continue;
        }
        let (header, body) = match (r.kind, builtins.iter().find(|b| b.name == r.name)) {
            (SkillKind::Builtin, Some(b)) => (b.header.clone(), b.body.clone()),
            _ => {
                let params: Vec<&str> = r.signature.iter().map(|p| p.name.as_str()).collect();
                (format!("{}({})", r.name, params.join(", ")), indent(&r.docstring))
            }
        };
        blocks.push(match detail {
            DocDetail::NameOnly => header,
            DocDetail::NameAndDocstring if body.is_empty() => header,
            DocDetail::NameAndDocstring => format!("{header}\n{body}"),
        });
    }
    blocks.join("\n\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_documented() {
        let names: Vec<String> = builtin_docs().into_iter().map(|d| d.name).collect();
        assert_eq!(
            names,
            [
                "start_task",
                "end_task",
                "get_all_object_ids",
                "get_container_id",
                "get_objects_contained_and_over",
                "find",
                "get_location",
                "pick",
                "get_place_position",
                "place",
                "learn_skill"
            ]
        );
        let find = builtin_docs().into_iter().find(|d| d.name == "find").unwrap();
        assert_eq!(find.params.len(), 4);
        assert!(find.params.iter().all(|p| p.optional));
        assert_eq!(find.params[3].ty, ParamType::ObjectIdList);
    }

    #[test]
    fn detail_levels() {
        let lib = SkillLibrary::new();
        let full = render_api_doc(&lib, DocDetail::NameAndDocstring, &[]);
        assert!(full.contains("learn_skill(skill_name)\n    Adds a new category-level skill"));
        assert!(full.contains("open_drawer, open_drawer_doc = learn_skill(\"open_drawer\")"));
        let short = render_api_doc(&lib, DocDetail::NameOnly, &[]);
        assert!(short.contains("pick(object_id)"));
        assert!(!short.contains("Picks up"));
        assert!(!render_api_doc(&lib, DocDetail::NameOnly, &["learn_skill"]).contains("learn_skill"));
    }
}
