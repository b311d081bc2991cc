// Minimal Python syntax highlighting: good enough to make student programs
// readable without pulling in a highlighting library.
const KEYWORDS = new Set([
    'and', 'as', 'assert', 'async', 'await', 'break', 'class', 'continue', 'def',
    'del', 'elif', 'else', 'except', 'finally', 'for', 'from', 'global', 'if',
    'import', 'in', 'is', 'lambda', 'nonlocal', 'not', 'or', 'pass', 'raise',
    'return', 'try', 'while', 'with', 'yield', 'True', 'False', 'None',
]);
const TOKEN_RE = /("""[\s\S]*?"""|'''[\s\S]*?'''|"(?:\\.|[^"\\\n])*"|'(?:\\.|[^'\\\n])*'|#[^\n]*|\b\d+(?:\.\d+)?\b|\b[A-Za-z_]\w*\b)/g;
function escapeHtml(text) {
    return text
        .replaceAll('&', '&amp;')
        .replaceAll('<', '&lt;')
        .replaceAll('>', '&gt;')
        .replaceAll('"', '&quot;');
}
function classify(token) {
    if (token.startsWith('#'))
        return 'hl-comment';
    if (/^["']/.test(token))
        return 'hl-string';
    if (/^\d/.test(token))
        return 'hl-number';
    if (KEYWORDS.has(token))
        return 'hl-keyword';
    return null;
}
export function highlightPython(source) {
    let html = '';
    let last = 0;
    for (const match of source.matchAll(TOKEN_RE)) {
        const index = match.index ?? 0;
        html += escapeHtml(source.slice(last, index));
        const token = match[0];
        const cls = classify(token);
        html += cls ? `<span class="${cls}">${escapeHtml(token)}</span>` : escapeHtml(token);
        last = index + token.length;
    }
    html += escapeHtml(source.slice(last));
    return html;
}
