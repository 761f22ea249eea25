import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='TrainingRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=255)),
                ('algorithm', models.CharField(choices=[('sgac', 'SGAC'), ('mpddpg_smbc', 'MP-DDPG with SM & BC'), ('mpddpg', 'MP-DDPG without SM & BC'), ('td3', 'TD3'), ('ddpg', 'DDPG')], max_length=20)),
                ('case_id', models.PositiveSmallIntegerField(choices=[(1, 'Case 1'), (2, 'Case 2'), (3, 'Case 3')])),
                ('seed', models.IntegerField()),
                ('run_dir', models.CharField(max_length=1024, unique=True)),
                ('config_text', models.TextField()),
                ('episodes', models.IntegerField(default=0)),
                ('max_training_return', models.FloatField(blank=True, null=True)),
                ('test_return', models.FloatField(blank=True, null=True)),
                ('success', models.BooleanField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['id'],
            },
        ),
        migrations.CreateModel(
            name='EpisodeRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('episode', models.IntegerField()),
                ('episode_return', models.FloatField()),
                ('test_return', models.FloatField(blank=True, null=True)),
                ('critic_loss', models.FloatField(blank=True, null=True)),
                ('actor_obj', models.FloatField(blank=True, null=True)),
                ('dual', models.FloatField(blank=True, null=True)),
                ('imitation_residual', models.FloatField(blank=True, null=True)),
                ('model_loss', models.FloatField(blank=True, null=True)),
                ('steps', models.IntegerField()),
                ('terminated_reason', models.CharField(max_length=20)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='episode_records', to='berthing.trainingrun')),
            ],
            options={
                'ordering': ['run', 'episode'],
                'constraints': [models.UniqueConstraint(fields=('run', 'episode'), name='unique_run_episode')],
            },
        ),
    ]
