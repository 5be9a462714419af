#!/usr/bin/env python3
"""Generate the bundled synthetic tweet corpus.

Tweets are stitched from opener + class core + closer fragments. Cores
carry class signals (conditional/future verbs and buying vocabulary for
opportunities, past gains for positive statements, announcements for
neutral, losses for negative awareness), a slice of cores is deliberately
ambiguous, and a small share of labels is flipped. Every kept tweet
passes the relevance filter and survives near-duplicate removal.

    python scripts/make_synthetic_corpus.py [--out PATH] [--n 500] [--seed 7]
"""

from __future__ import annotations

import argparse
import random
import re
from pathlib import Path

from oppscreen.corpus import LABELS, AnnotatedTweet, EmotionLabel, save_dataset
from oppscreen.preprocess import filter_relevant, jaccard_similarity, load_resources, preprocess_pipeline

S_POS, P_POS, NEUTRAL, A_NEG = LABELS
TICKER_RE = re.compile(r"\$([A-Z][A-Z0-9]*)")

# label proportions of the annotated source corpus
RATIOS = {P_POS: 1198, S_POS: 669, NEUTRAL: 1289, A_NEG: 1803}

TICKERS = ["SAN", "BBVA", "ITX", "IBE", "TEF", "REP", "IAG", "NFLX", "AAPL", "TSLA", "AMZN", "NVDA", "MSFT", "GRF"]
TICKER_WEIGHTS = [9, 7, 6, 6, 5, 4, 3, 5, 6, 7, 3, 4, 2, 2]
NUMBERS = ["2", "3", "4,5", "5", "7", "10", "12", "15", "20", "25", "30", "45", "50", "100"]

OPENERS = [
    "", "", "", "hoy", "ahora", "señores", "atención", "bueno", "veo que", "parece que",
    "según el gráfico", "en mi opinión", "ya", "mañana", "esta semana",
]

CORES = {
    P_POS: [
        "{t} podría subir hasta {n} euros, buena oportunidad",
        "compraría {t} en estos niveles, potencial enorme",
        "{t} apunta a romper la resistencia, entraría ya",
        "aprovecharía la caída de {t} para entrar, precio atractivo",
        "{t} está barato, creo que rebotará pronto",
        "objetivo {n} euros para {t}, acumularía",
        "si supera los {n} euros {t} se disparará",
        "entrada interesante en {t}, podría llegar a máximos",
        "{t} tiene recorrido, compraré en la próxima corrección",
        "veremos a {t} en máximos, oportunidad de compra",
        "{t} subirá con fuerza tras el acuerdo, invertiría",
        "buen momento para entrar en {t}, subirá",
        "{t} en soporte, ocasión ideal para comprar",
        "me gustaría entrar en {t} antes del rebote",
        "{t} llegará a {n} euros, oportunidad clara",
        "acumularé {t} si baja un poco más, gran potencial",
        "ojalá {t} llegue a {n}, compraría más",
        "con estos datos {t} rebotará, entraría",
        "precio inmejorable en {t}, aprovecharía",
        "{t} superará los máximos, objetivo {n} euros",
        "yo compraria {t} a este precio",
        "{t} subira pronto, oportunidad",
    ],
    S_POS: [
        "{t} sube un {n}% hoy, excelente sesión",
        "{t} cierra en verde, gran día",
        "{t} marcó máximos históricos, genial",
        "{t} ganó un {n}% esta semana, contento",
        "buenos resultados de {t}, el mercado celebra",
        "{t} supera la resistencia con volumen, fuerte subida",
        "{t} recupera los {n} euros, sólido",
        "espectacular subida de {t} en la apertura",
        "{t} rebotó con fuerza ayer, feliz con mi cartera",
        "dividendo excelente de {t}, contento con la inversión",
        "qué alegría ver {t} en verde",
        "{t} subió un {n}% tras el informe, increíble",
        "gran trimestre de {t}, beneficios récord",
        "{t} continúa su racha alcista, muy positivo",
    ],
    NEUTRAL: [
        "{t} publica sus resultados el jueves",
        "{t} presenta el informe anual mañana",
        "junta de accionistas de {t} el {n} de mayo",
        "{t} cotiza a {n} euros en la apertura",
        "reunión del banco central el jueves, atención a {t}",
        "{t} anuncia dividendo de {n} euros por acción",
        "volumen diario de {t}: {n} millones",
        "¿alguna noticia de {t} hoy?",
        "el gobierno revisa el sector, {t} entre las empresas",
        "{t} mantiene el precio en {n} euros",
        "datos trimestrales de {t} el martes",
        "{t} cierra la sesión en {n} euros",
        "¿qué hora es la junta de {t}?",
        "informe del sector con {t} y otras empresas",
        "{t} publicará el dato de ventas en marzo",
    ],
    A_NEG: [
        "{t} cae un {n}% tras los resultados, cuidado",
        "{t} se desploma, pérdidas fuertes",
        "mucho riesgo en {t}, tendencia bajista",
        "{t} rompe el soporte, precaución",
        "vendería {t}, esto se hunde",
        "{t} sigue cayendo, terrible semana",
        "miedo en {t}, castigo en bolsa",
        "{t} perdió los {n} euros, mala noticia",
        "crisis en {t}, horrible día para la cartera",
        "{t} caerá más, yo vendo",
        "{t} en mínimos, desastre",
        "{t} sufre con la subida del petróleo",
        "cuidado con {t}, muy débil",
        "{t} bajó un {n}% ayer, preocupante",
        "mal escenario para {t}, salida ya",
        "{t} se hunde, qué debacle",
        "mucha precausion con {t}, peligroso",
    ],
}

# fragments that blur class boundaries
HARD_CORES = {
    P_POS: [
        "ayer compré {t}, subirá",
        "{t} cayó pero rebotará, oportunidad",
        "{t} sube hoy y seguirá subiendo",
        "pese a la caída {t} tiene potencial",
        "{t} en máximos, seguirá subiendo",
        "buenos resultados de {t}, subirá más",
        "{t} cae hoy, momento de comprar",
        "cuidado, pero {t} podría rebotar",
        "{t} está en verde, entraría",
        "el sector sube, {t} será el siguiente",
    ],
    S_POS: [
        "{t} seguirá en verde tras el gran día",
        "buena subida de {t}, podría seguir",
        "{t} sube tras el dato, bien",
        "compré {t} ayer y ya gana un {n}%",
        "{t} cerró arriba, buena oportunidad aprovechada",
        "entré en {t} y sube, contento",
        "{t} rebota con fuerza hoy",
    ],
    NEUTRAL: [
        "{t} abre en {n} euros, veremos",
        "¿comprar o vender {t}?",
        "{t} sin cambios, mercado tranquilo",
        "¿subirá {t} tras los resultados?",
        "{t} presenta resultados, veremos si sube o baja",
        "¿alguien compraría {t} a este precio?",
        "{t} cotiza en mínimos del año",
        "mañana junta de {t}, podría haber noticias",
    ],
    A_NEG: [
        "¿oportunidad? {t} se hunde",
        "{t} subió pero caerá, vendería",
        "nada de comprar {t}, riesgo alto",
        "{t} podría caer a {n} euros, cuidado",
        "{t} sube pero no me fío, peligroso",
        "la oportunidad de {t} ya pasó, ahora baja",
        "{t} perderá los soportes, vendería",
        "dicen que {t} subirá, yo no lo veo",
    ],
}

# short remarks; drawn from the tweet's own class only part of the time
COMMENTS = {
    P_POS: ["buena oportunidad", "gran potencial", "yo entraría", "objetivo cerca", "ocasión de compra", "subirá pronto", "aprovecharía"],
    S_POS: ["gran día", "muy contento", "excelente", "todo en verde", "qué alegría", "buen trimestre"],
    NEUTRAL: ["veremos", "atención al dato", "sin noticias", "según el informe", "pendientes de la junta", "a la espera"],
    A_NEG: ["cuidado", "mal día", "mucho riesgo", "qué miedo", "no me fío", "muy débil"],
}
NEIGHBOUR = {P_POS: S_POS, S_POS: P_POS, NEUTRAL: A_NEG, A_NEG: NEUTRAL}

CLOSERS = {
    "shared": ["", "", "", "!", "!!", "jaja", "ya veremos", "de momento", "sin duda", "#ibex35", "#nasdaq", "hasta ahora"],
    P_POS: ["🚀", "👀", "💰", "🚀🚀"],
    S_POS: ["📈", "🎉", "👍"],
    NEUTRAL: ["🤔", ""],
    A_NEG: ["📉", "⚠️", "😱"],
}

HARD_SHARE = 0.3
LABEL_NOISE = 0.03
CLOSER_SIGNAL = 0.25
COMMENT_RATE = 0.6
COMMENT_SIGNAL = 0.5


def make_text(label: EmotionLabel, rng: random.Random) -> str:
    pool = HARD_CORES[label] if rng.random() < HARD_SHARE else CORES[label]
    ticker = rng.choices(TICKERS, TICKER_WEIGHTS)[0]
    core = rng.choice(pool).format(t="$" + ticker, n=rng.choice(NUMBERS))
    opener = rng.choice(OPENERS)
    if rng.random() < CLOSER_SIGNAL:
        closer = rng.choice(CLOSERS[label])
    else:
        closer = rng.choice(CLOSERS["shared"])
    comment = ""
    if rng.random() < COMMENT_RATE:
        r = rng.random()
        if r < COMMENT_SIGNAL:
            source = label
        elif r < COMMENT_SIGNAL + (1 - COMMENT_SIGNAL) / 2:
            source = NEIGHBOUR[label]
        else:
            source = rng.choice(LABELS)
        comment = rng.choice(COMMENTS[source])
    text = " ".join(part for part in (opener, core, comment, closer) if part)
    if rng.random() < 0.2:
        other = rng.choices(TICKERS, TICKER_WEIGHTS)[0]
        if other != ticker:
            text += f" ${other}"
    return text[0].upper() + text[1:]


def generate(n: int, seed: int) -> list[AnnotatedTweet]:
    rng = random.Random(seed)
    resources = load_resources()
    total = sum(RATIOS.values())
    targets = {label: round(n * RATIOS[label] / total) for label in LABELS}
    targets[A_NEG] += n - sum(targets.values())

    schedule = [label for label in LABELS for _ in range(targets[label])]
    rng.shuffle(schedule)
    kept: list[AnnotatedTweet] = []
    token_sets: list[set] = []
    for label in schedule:
        for _ in range(500):
            text = make_text(label, rng)
            if not filter_relevant(text, resources.filter, resources.lexicon):
                continue
            tokens = set(preprocess_pipeline(text, resources).tokens)
            if not tokens or any(jaccard_similarity(tokens, other) >= 0.75 for other in token_sets):
                continue
            break
        else:
            raise RuntimeError(f"could not place another {label} tweet; add templates")
        gold = label
        if rng.random() < LABEL_NOISE:
            gold = rng.choice([x for x in LABELS if x is not label])
        tickers = tuple(dict.fromkeys(TICKER_RE.findall(text)))
        kept.append(AnnotatedTweet(len(kept) + 1, text, tickers, gold))
        token_sets.append(tokens)
    return kept


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    default_out = Path(__file__).resolve().parents[1] / "src" / "oppscreen" / "data" / "synthetic_corpus.jsonl"
    parser.add_argument("--out", type=Path, default=default_out)
    parser.add_argument("--n", type=int, default=500)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    tweets = generate(args.n, args.seed)
    save_dataset(tweets, args.out)
    counts = {str(label): sum(t.emotion is label for t in tweets) for label in LABELS}
    print(f"wrote {len(tweets)} tweets to {args.out}: {counts}")


if __name__ == "__main__":
    main()
