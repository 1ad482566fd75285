#!/usr/bin/env python
"""Command line entry point: corpus statistics, splits, extraction, combination and scoring."""
import argparse
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from toxtrig import config, init_logger
from toxtrig.alignment import AlignmentDiagnostics, align_phrases, resolve_overlaps
from toxtrig.clients import RecordingClient, ReplayClient
from toxtrig.combiner import CombinePolicy, combine_predictions
from toxtrig.corpus import (
    corpus_digest, corpus_stats, format_stats, load_corpus, load_predictions, save_corpus, save_predictions,
    split_corpus,
)
from toxtrig.dictionary import build_dictionary, dict_extract, load_dictionary, save_dictionary
from toxtrig.evaluation import evaluate, format_report, write_report
from toxtrig.exceptions import ConfigError, ToxTrigError
from toxtrig.llm import extract_corpus, sample_examples
from toxtrig.manifest import RunManifest

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2

STRATEGIES = ('dict', 'zero-shot', 'few-shot')
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


def cmd_stats(args, cfg):
    corpus = load_corpus(args.input, with_gold=not args.no_gold, tag_map=config.tag_map(cfg))
    print(format_stats(corpus_stats(corpus), name=Path(args.input).name or 'Corpus'))
    return EXIT_OK


def cmd_split(args, cfg):
    corpus = load_corpus(args.input, with_gold=not args.no_gold, tag_map=config.tag_map(cfg))
    train, dev = split_corpus(corpus, args.holdout, args.seed)
    save_corpus(train, args.out_train)
    save_corpus(dev, args.out_dev)
    print('{} -> {} train / {} dev'.format(len(corpus), len(train), len(dev)))
    return EXIT_OK


def cmd_build_dict(args, cfg):
    train = load_corpus(args.train, with_gold=True, tag_map=config.tag_map(cfg))
    dictionary = build_dictionary(train, config.normalization_policy(cfg), config.min_label_ratio(cfg, args.min_label_ratio))
    save_dictionary(dictionary, args.out)
    print('{} entries ({} rejected for type conflicts, {} below the label ratio)'.format(
        len(dictionary), dictionary.rejected_conflict, dictionary.rejected_ratio))
    return EXIT_OK


def _dictionary_for(args, cfg):
    """Loads or builds the dictionary; returns it with the settings that reproduce it."""
    policy = config.normalization_policy(cfg)
    if args.dict:
        dictionary = load_dictionary(args.dict, policy)
        settings = {'path': str(args.dict)}
    elif args.train:
        train = load_corpus(args.train, with_gold=True, tag_map=config.tag_map(cfg))
        ratio = config.min_label_ratio(cfg, getattr(args, 'min_label_ratio', None))
        dictionary = build_dictionary(train, policy, ratio)
        settings = {'train': str(args.train), 'train_digest': corpus_digest(train), 'min_label_ratio': ratio}
    else:
        raise ConfigError('The dictionary strategy needs --dict FILE or --train DIR.')
    settings.update(entries=len(dictionary), digest=dictionary.digest())
    return dictionary, settings


def _dictionary_manifest(command, args, corpus, policy, dict_settings):
    return RunManifest(
        command=command,
        strategy='dict',
        settings={'input': str(args.input), 'normalization': asdict(policy), 'dictionary': dict_settings},
        seed=None,
        corpus_digest=corpus_digest(corpus),
    )


def run_dictionary(corpus, dictionary, manifest):
    predictions = {}
    for doc in corpus:
        predictions[doc.id] = dict_extract(doc, dictionary)
        manifest.record(doc.id, mentions=len(predictions[doc.id]))
    return predictions


def cmd_dict_extract(args, cfg):
    corpus = load_corpus(args.input, with_gold=False, tag_map=config.tag_map(cfg))
    dictionary, dict_settings = _dictionary_for(args, cfg)
    manifest = _dictionary_manifest('dict-extract', args, corpus, dictionary.policy, dict_settings)
    save_predictions(args.out, corpus, run_dictionary(corpus, dictionary, manifest))
    manifest.write(args.out)
    return EXIT_OK


def run_llm(corpus, rcfg, template, examples, client, policy, manifest):
    results, failures = extract_corpus(corpus, rcfg, template, examples, client)
    predictions = {}
    for doc in corpus:
        diagnostics = AlignmentDiagnostics(doc.id)
        spans = align_phrases(doc, results.get(doc.id, []), policy, diagnostics)
        predictions[doc.id] = resolve_overlaps(spans, diagnostics)
        manifest.record(
            doc.id,
            sections=len(results.get(doc.id, [])),
            mentions=len(predictions[doc.id]),
            failed_sections=[f.to_dict() for f in failures.get(doc.id, [])],
            **diagnostics.to_dict()
        )
    return predictions


def _llm_client(args, cfg):
    if args.replay:
        return ReplayClient(args.replay)
    client = config.http_client(cfg)
    if args.record:
        client = RecordingClient(client, args.record)
    return client


def cmd_extract(args, cfg):
    corpus = load_corpus(args.input, with_gold=False, tag_map=config.tag_map(cfg))
    policy = config.normalization_policy(cfg)

    if args.strategy == 'dict':
        dictionary, dict_settings = _dictionary_for(args, cfg)
        manifest = _dictionary_manifest('extract', args, corpus, dictionary.policy, dict_settings)
        save_predictions(args.out, corpus, run_dictionary(corpus, dictionary, manifest))
        manifest.write(args.out)
        return EXIT_OK

    k = 0 if args.strategy == 'zero-shot' else args.k
    rcfg = config.request_config(cfg, k=k, seed=args.seed)
    template = config.prompt_template(cfg, True if args.assertion_variant else None)

    examples = []
    train_digest = None
    if rcfg.k:
        if not args.train:
            raise ConfigError('Few-shot extraction needs --train DIR to sample examples from.')
        train = load_corpus(args.train, with_gold=True, tag_map=config.tag_map(cfg))
        train_digest = corpus_digest(train)
        examples = sample_examples(train, rcfg.k, rcfg.seed, rcfg.example_char_budget)

    client = _llm_client(args, cfg)
    manifest = RunManifest(
        command='extract',
        strategy=args.strategy,
        settings={
            'input': str(args.input),
            'train': str(args.train) if rcfg.k else None,
            'train_digest': train_digest,
            'request': asdict(rcfg),
            'prompt': asdict(template),
            'normalization': asdict(policy),
            'replay': args.replay,
            'record': args.record,
            'config': config.snapshot(cfg),
        },
        seed=rcfg.seed,
        corpus_digest=corpus_digest(corpus),
        examples=[example.doc_id for example in examples],
    )

    try:
        predictions = run_llm(corpus, rcfg, template, examples, client, policy, manifest)
        save_predictions(args.out, corpus, predictions)
    finally:
        if isinstance(client, RecordingClient):
            client.save()
        manifest.write(args.out)

    if manifest.failed_documents:
        log.warning('%d documents had failed sections: %s',
                    len(manifest.failed_documents), ', '.join(manifest.failed_documents))
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_combine(args, cfg):
    corpus = load_corpus(args.input, with_gold=False, tag_map=config.tag_map(cfg))
    tags = config.tag_map(cfg)
    a = load_predictions(args.a, corpus, tags)
    b = load_predictions(args.b, corpus, tags)
    combined = combine_predictions(a, b, config.combine_policy(cfg, args.combine_policy))
    save_predictions(args.out, corpus, combined)
    return EXIT_OK


def cmd_evaluate(args, cfg):
    gold = load_corpus(args.gold, with_gold=True, tag_map=config.tag_map(cfg))
    predictions = load_predictions(args.pred, gold, config.tag_map(cfg))
    report = evaluate(gold, predictions)
    print(format_report(report))
    if args.out:
        write_report(report, args.out)
    return EXIT_OK


def _add_common_arguments(parser, config_default=None, level_default='INFO'):
    parser.add_argument('--config', default=config_default,
                        help='INI configuration file (read after /etc/toxtrig.conf and ./toxtrig.conf)')
    parser.add_argument('--log-level', default=level_default, choices=LOG_LEVELS)


def build_arg_parser():
    p = argparse.ArgumentParser(prog='toxtrig', description='Toxic-habit trigger extraction for clinical case reports.')
    _add_common_arguments(p)

    # Accepted after the subcommand too; a flag given there wins.
    common = argparse.ArgumentParser(add_help=False)
    _add_common_arguments(common, argparse.SUPPRESS, argparse.SUPPRESS)

    sub = p.add_subparsers(dest='cmd', required=True)

    s = sub.add_parser('stats', help='Document, sentence and mention counts', parents=[common])
    s.add_argument('--in', dest='input', required=True)
    s.add_argument('--no-gold', action='store_true', help='The directory has no .ann files')
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser('split', help='Deterministic train/dev split', parents=[common])
    s.add_argument('--in', dest='input', required=True)
    s.add_argument('--holdout', type=int, required=True)
    s.add_argument('--seed', type=int, required=True)
    s.add_argument('--out-train', required=True)
    s.add_argument('--out-dev', required=True)
    s.add_argument('--no-gold', action='store_true')
    s.set_defaults(func=cmd_split)

    s = sub.add_parser('build-dict', help='Build the unambiguous surface-form dictionary', parents=[common])
    s.add_argument('--train', required=True)
    s.add_argument('--min-label-ratio', type=float, default=None)
    s.add_argument('--out', required=True)
    s.set_defaults(func=cmd_build_dict)

    s = sub.add_parser('dict-extract', help='Tag documents with a saved dictionary', parents=[common])
    s.add_argument('--dict', required=True)
    s.add_argument('--in', dest='input', required=True)
    s.add_argument('--out', required=True)
    s.set_defaults(func=cmd_dict_extract, train=None)

    s = sub.add_parser('extract', help='Extract trigger mentions', parents=[common])
    s.add_argument('--strategy', choices=STRATEGIES, required=True)
    s.add_argument('--k', type=int, default=None, help='Few-shot examples (default from config, else 5)')
    s.add_argument('--seed', type=int, default=None)
    s.add_argument('--in', dest='input', required=True)
    s.add_argument('--out', required=True)
    s.add_argument('--train', default=None, help='Annotated train directory (example pool / dictionary source)')
    s.add_argument('--dict', default=None, help='Saved dictionary for --strategy dict')
    s.add_argument('--min-label-ratio', type=float, default=None)
    s.add_argument('--assertion-variant', action='store_true', help='Ask the model for asserted/negated labels')
    backend = s.add_mutually_exclusive_group()
    backend.add_argument('--replay', default=None, help='Serve responses from a replay file')
    backend.add_argument('--record', default=None, help='Record live responses to a replay file')
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser('combine', help='Merge two prediction directories', parents=[common])
    s.add_argument('--in', dest='input', required=True, help='Directory with the document texts')
    s.add_argument('--a', required=True, help='Dictionary predictions')
    s.add_argument('--b', required=True, help='LLM predictions')
    s.add_argument('--combine-policy', choices=[p.value for p in CombinePolicy], default=None)
    s.add_argument('--out', required=True)
    s.set_defaults(func=cmd_combine)

    s = sub.add_parser('evaluate', help='Score predictions against gold', parents=[common])
    s.add_argument('--gold', required=True)
    s.add_argument('--pred', required=True)
    s.add_argument('--out', default=None, help='Machine-readable report file')
    s.set_defaults(func=cmd_evaluate)

    return p


def main(argv=None):
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    init_logger(getattr(logging, args.log_level))

    try:
        cfg = config.load_configuration(args.config)
        return args.func(args, cfg)
    except ConfigError as e:
        log.error('%s', e)
        print('toxtrig: {}'.format(e), file=sys.stderr)
        return EXIT_USAGE
    except ToxTrigError as e:
        log.exception('%s failed', args.cmd)
        print('toxtrig: {}'.format(e), file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == '__main__':
    sys.exit(main())
